"""Offline analysis: assemble an AnalysisContext from session artifacts and run the meters."""

from __future__ import annotations

import json
from pathlib import Path

from .codec import DecodeReport, decode, encode, load_vtes
from .metrics import AnalysisContext, default_registry
from .net.session import META_FILE, REF_RAW_FILE, REPORT_FILE, RX_ENCODED_FILE, RX_RAW_FILE, TRACE_FILE
from .rawvideo import load_y4m
from .trace import extract_rtp_records, read_pcap


class AnalysisError(ValueError):
    pass


def build_context(trace=None, rx_vtes=None, rx_y4m=None, ref_y4m=None, *, ref_vtes=None,
                  decode_report=None, session_meta: dict | None = None, options: dict | None = None) -> AnalysisContext:
    if not any(p is not None for p in (trace, rx_vtes, rx_y4m, ref_y4m, ref_vtes)):
        raise AnalysisError("no analysis inputs given")
    meta = dict(session_meta or {})
    records = None
    if trace is not None:
        port = (meta.get("config") or {}).get("rtp_port")
        records = extract_rtp_records(read_pcap(trace), port) or None
    rx_encoded = load_vtes(rx_vtes) if rx_vtes is not None else None
    rx_raw = load_y4m(rx_y4m) if rx_y4m is not None else None
    ref_raw = load_y4m(ref_y4m) if ref_y4m is not None else None

    if rx_encoded is not None:
        meta.setdefault("gop_size", rx_encoded.gop_size)
        meta.setdefault("fps", rx_encoded.fps_num / rx_encoded.fps_den)
    ref_encoded = load_vtes(ref_vtes) if ref_vtes is not None else None
    if ref_encoded is None and ref_raw is not None and rx_encoded is not None:
        ref_raw.fps_num, ref_raw.fps_den = rx_encoded.fps_num, rx_encoded.fps_den
        ref_encoded = encode(ref_raw, rx_encoded.gop_size, rx_encoded.quant_shift)
    if ref_encoded is not None and not meta.get("bitrate_kbps"):
        meta["bitrate_kbps"] = ref_encoded.bitrate_kbps()

    report = None
    if isinstance(decode_report, DecodeReport):
        report = decode_report
    elif decode_report is not None:
        report = DecodeReport.from_dict(json.loads(Path(decode_report).read_text()))
    elif rx_encoded is not None and ref_raw is not None:
        rebuilt, report = decode(rx_encoded, len(ref_raw))
        if rx_raw is None:
            rx_raw = rebuilt

    return AnalysisContext(
        packet_records=records,
        rtt_samples=meta.get("rtt_samples") or None,
        rx_encoded=rx_encoded,
        ref_encoded=ref_encoded,
        rx_raw=rx_raw,
        ref_raw=ref_raw,
        decode_report=report,
        session_meta=meta,
        options=dict(options or {}),
    )


def context_from_run(run_dir, options: dict | None = None) -> AnalysisContext:
    d = Path(run_dir)
    meta_path = d / META_FILE
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}

    def opt(name):
        p = d / name
        return p if p.exists() else None

    return build_context(opt(TRACE_FILE), opt(RX_ENCODED_FILE), opt(RX_RAW_FILE), opt(REF_RAW_FILE),
                         decode_report=opt(REPORT_FILE), session_meta=meta, options=options)


def analyze(ctx: AnalysisContext, measures, registry=None):
    registry = registry or default_registry()
    return registry.run(list(measures), ctx)
