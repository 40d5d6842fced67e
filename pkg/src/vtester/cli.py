"""``vt``: command-line entry point for the whole pipeline."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .analysis import AnalysisError, analyze, build_context, context_from_run
from .codec import VtesError, decode, encode, load_vtes, save_vtes
from .config import ConfigError, ToolConfig, load_config
from .metrics import MeasureResult
from .net import ImpairProxy, SessionError, TestServer, impair_proxy, receive_stream, run_client, send_stream, serve
from .net.session import TRACE_FILE, TRANSPORTS, parse_hostport
from .rawvideo import Y4MError, load_y4m, save_y4m
from .report import write_mos_bars, write_reports
from .rtp import RtpError, depacketize, packetize, parse_packet
from .synth import moving_objects
from .trace import PcapError

log = logging.getLogger("vtester")

# input/format problems -> 2, runtime/session failures -> 1
INPUT_ERRORS = (ConfigError, FileNotFoundError, Y4MError, VtesError, PcapError, RtpError, AnalysisError, ValueError)


def _config(args) -> ToolConfig:
    return load_config(args.config) if getattr(args, "config", None) else ToolConfig()


def cmd_serve(args) -> int:
    cfg = _config(args)
    db = args.database or cfg.database_dir
    if db is None:
        raise ConfigError("no video database: pass --database or set [database] dir")
    port = args.port or int(cfg.session.get("control_port", 8000))
    serve(db, port, args.host)
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    session = cfg.session_config(video_id=args.video)
    out = Path(args.out or cfg.output_dir)
    db = args.database or cfg.database_dir
    if db is None:
        raise ConfigError("no video database: pass --database or set [database] dir")
    server = proxy = None
    try:
        if args.local_server:
            server = TestServer(db, session.control_port).start()
        if cfg.loss_p > 0:
            proxy = ImpairProxy(cfg.impair_port, ("127.0.0.1", session.rtp_port), cfg.loss_p, cfg.seed).start()
            session.send_to = f"127.0.0.1:{proxy.port}"
        artifacts = run_client(session, out, db)
    finally:
        if proxy is not None:
            proxy.stop()
        if server is not None:
            server.stop()
    if proxy is not None:
        artifacts.session_meta["impair"] = {"loss": cfg.loss_p, "seed": cfg.seed, "seen": len(proxy.drop_log),
                                            "dropped": sum(proxy.drop_log)}
        (out / "session.json").write_text(json.dumps(artifacts.session_meta, indent=2))
    print(json.dumps({"out_dir": str(out), "decode_report": {
        k: v for k, v in artifacts.decode_report.to_dict().items() if k != "present"}}))
    return _analyze_dirs([out], out, cfg)


def cmd_send(args) -> int:
    stream = load_vtes(args.vtes)
    packets = packetize(stream, mtu_payload=args.mtu, ssrc=args.ssrc)
    report = send_stream(packets, args.transport, parse_hostport(args.dest), args.pacing)
    print(json.dumps(vars(report)))
    return 0


def cmd_recv(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    received, sink = receive_stream(args.transport, args.port, args.idle, group=args.group,
                                    first_timeout=args.first_timeout)
    if not received:
        raise SessionError("no RTP packets received before timeout")
    sink.write(out / TRACE_FILE)
    summary = {"packets": len(received), "trace": str(out / TRACE_FILE)}
    if args.header_from:
        params = load_vtes(args.header_from).params()
        rx, complete = depacketize([parse_packet(d) for _, d in received], params)
        save_vtes(rx, out / "rx.vtes")
        summary["frames"] = len(rx.frames)
        summary["incomplete"] = [n for n, ok in complete.items() if not ok]
    print(json.dumps(summary))
    return 0


def cmd_impair(args) -> int:
    impair_proxy(args.listen, parse_hostport(args.forward), args.loss, args.seed)
    return 0


def cmd_encode(args) -> int:
    video = load_y4m(args.input)
    save_vtes(encode(video, args.gop, args.quant), args.output)
    return 0


def cmd_decode(args) -> int:
    stream = load_vtes(args.input)
    expected = args.expected_frames
    if expected is None:
        expected = max((f.frame_number for f in stream.frames), default=-1) + 1
    video, report = decode(stream, expected)
    save_y4m(video, args.output)
    print(json.dumps(report.to_dict()))
    return 0


def cmd_synth(args) -> int:
    video = moving_objects(args.width, args.height, args.frames, seed=args.seed)
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    save_y4m(video, args.output)
    return 0


def _analyze_dirs(run_dirs, out: Path, cfg: ToolConfig) -> int:
    options = cfg.analysis_options()
    bars = []
    for d in run_dirs:
        ctx = context_from_run(d, options)
        results = analyze(ctx, cfg.measures)
        target = out if len(run_dirs) == 1 else out / Path(d).name
        write_reports(results, target, ctx.session_meta, options, {"run_dir": d})
        by_name = {r.name: r for r in results if isinstance(r, MeasureResult)}
        if "mos_hist" in by_name:
            ilr = by_name["iframe_loss"].data if "iframe_loss" in by_name else None
            bars.append((Path(d).name, by_name["mos_hist"].data, ilr))
    if len(run_dirs) > 1 and bars:
        write_mos_bars(bars, out / "mos_bars.dat")
    return 0


def cmd_analyze(args) -> int:
    cfg = _config(args)
    if args.measures:
        cfg.measures = [m.strip() for m in args.measures.split(",") if m.strip()]
    out = Path(args.out)
    if args.run_dir:
        return _analyze_dirs(args.run_dir, out, cfg)
    options = cfg.analysis_options()
    meta = json.loads(Path(args.session_meta).read_text()) if args.session_meta else None
    ctx = build_context(args.trace, args.rx_vtes, args.rx_y4m, args.ref_y4m, ref_vtes=args.ref_vtes,
                        decode_report=args.decode_report, session_meta=meta, options=options)
    results = analyze(ctx, cfg.measures)
    inputs = {"trace": args.trace, "rx_vtes": args.rx_vtes, "rx_y4m": args.rx_y4m, "ref_y4m": args.ref_y4m,
              "ref_vtes": args.ref_vtes}
    write_reports(results, out, ctx.session_meta, options, inputs)
    skipped = [r.name for r in results if r.skipped]
    print(json.dumps({"out_dir": str(out), "measures": len(results), "skipped": skipped}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vt", description="Video quality assessment over IP networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("serve", help="run the test server")
    s.add_argument("-c", "--config")
    s.add_argument("--database")
    s.add_argument("--port", type=int)
    s.add_argument("--host", default="0.0.0.0")
    s.set_defaults(func=cmd_serve)

    s = sub.add_parser("run", help="run a client session, then analyze it")
    s.add_argument("-c", "--config", required=True)
    s.add_argument("--video")
    s.add_argument("--database")
    s.add_argument("-o", "--out")
    s.add_argument("--local-server", action="store_true", help="start an in-process server on control_port")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("send", help="stream a VTES file as RTP")
    s.add_argument("vtes")
    s.add_argument("--dest", required=True, help="host:port")
    s.add_argument("--transport", choices=TRANSPORTS, default="udp_unicast")
    s.add_argument("--pacing", type=float, default=1.0)
    s.add_argument("--mtu", type=int, default=1400)
    s.add_argument("--ssrc", type=int, default=0)
    s.set_defaults(func=cmd_send)

    s = sub.add_parser("recv", help="receive an RTP stream into a trace")
    s.add_argument("--port", type=int, required=True)
    s.add_argument("--transport", choices=TRANSPORTS, default="udp_unicast")
    s.add_argument("--group")
    s.add_argument("--idle", type=float, default=1.0)
    s.add_argument("--first-timeout", type=float, default=30.0)
    s.add_argument("--header-from", help="VTES file supplying stream geometry; writes rx.vtes")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_recv)

    s = sub.add_parser("impair", help="seeded packet-loss UDP proxy")
    s.add_argument("--loss", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--listen", type=int, required=True)
    s.add_argument("--forward", required=True, help="host:port")
    s.set_defaults(func=cmd_impair)

    s = sub.add_parser("encode", help="Y4M -> VTES")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--gop", type=int, default=15)
    s.add_argument("--quant", type=int, default=0)
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("decode", help="VTES -> Y4M with loss concealment; prints the decode report")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--expected-frames", type=int)
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("analyze", help="compute metrics and write reports")
    s.add_argument("-c", "--config")
    s.add_argument("--trace")
    s.add_argument("--rx-vtes")
    s.add_argument("--rx-y4m")
    s.add_argument("--ref-y4m")
    s.add_argument("--ref-vtes")
    s.add_argument("--decode-report")
    s.add_argument("--session-meta")
    s.add_argument("--run-dir", action="append", help="artifact directory from `vt run`; repeatable")
    s.add_argument("--measures", help="comma-separated measure names")
    s.add_argument("-o", "--out", required=True)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synth", help="write a synthetic moving-object Y4M sequence")
    s.add_argument("output")
    s.add_argument("--width", type=int, default=352)
    s.add_argument("--height", type=int, default=288)
    s.add_argument("--frames", type=int, default=299)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except SessionError as exc:
        print(f"vt: error: {exc}", file=sys.stderr)
        return 1
    except INPUT_ERRORS as exc:
        print(f"vt: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"vt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
