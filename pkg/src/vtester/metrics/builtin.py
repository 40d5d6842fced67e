"""Built-in measures registered on every new registry."""

from __future__ import annotations

from collections import Counter

from ..codec import decode, dismiss_first_gop
from . import bs, qos, vq
from .core import AnalysisContext, MeasureResult, MeterRegistry, series, value

DEFAULT_PLD_K = 10

BUILTIN_MEASURES = (
    "qos.latency", "qos.interarrival", "qos.jitter", "qos.clock_skew", "qos.bandwidth", "qos.plr", "qos.pld",
    "bs.framing_rx", "bs.framing_ref", "bs.gop_sizes", "bs.gop_size", "bs.iframe_loss",
    "vq.psnr", "vq.ssim", "vq.mos", "vq.mos_hist", "vq.div", "vq.div_intervals", "vq.g1070",
)

DIV_RULE = "fraction of frames with MOS(rx) < MOS(reference encoding)"
IFRAME_RATE_RULE = "count / (count + received I-frames)"


def _gop_size(ctx: AnalysisContext) -> int | None:
    meta = ctx.session_meta or {}
    if meta.get("gop_size"):
        return int(meta["gop_size"])
    for s in (ctx.ref_encoded, ctx.rx_encoded):
        if s is not None:
            return s.gop_size
    return None


def aligned(ctx: AnalysisContext):
    """(rx, ref, first reference index) after first-GOP dismissal when needed."""
    def compute():
        rx, ref, report = ctx.rx_raw, ctx.ref_raw, ctx.decode_report
        if report is None or report.start_offset == 0:
            return rx, ref, 0
        rx2, ref2 = dismiss_first_gop(rx, ref, report, _gop_size(ctx) or -report.start_offset)
        return rx2, ref2, -report.start_offset
    return ctx.cached("aligned", compute)


def _psnr(ctx):
    def compute():
        rx, ref, _ = aligned(ctx)
        return vq.psnr_series(rx, ref)
    return ctx.cached("psnr", compute)


def _mos_table(ctx):
    return ctx.options.get("mos_table") or vq.DEFAULT_MOS_TABLE


def _mos(ctx):
    return ctx.cached("mos", lambda: vq.mos_from_psnr(_psnr(ctx), _mos_table(ctx)))


def _ref_mos(ctx):
    """MOS of the loss-free decode of the reference encoding, on the aligned frames."""
    def compute():
        enc = ctx.ref_encoded
        clean, _ = decode(enc, len(enc.frames))
        _, ref, start = aligned(ctx)
        clean.frames = clean.frames[start:start + len(ref)]
        return vq.mos_from_psnr(vq.psnr_series(clean, ref), _mos_table(ctx))
    return ctx.cached("ref_mos", compute)


def _frame_xs(ctx, n):
    start = aligned(ctx)[2]
    return range(start, start + n)


def _framing(name, stream) -> MeasureResult:
    entries = bs.framing_structure(stream)
    return series(name, [e.size for e in entries], "bytes", [e.frame_number for e in entries],
                  types="".join(e.frame_type for e in entries))


def _gops(ctx):
    return ctx.cached("gops", lambda: bs.observed_gops(bs.framing_structure(ctx.rx_encoded)))


def register_builtins(reg: MeterRegistry) -> MeterRegistry:
    r = reg.register
    recs = ("packet_records",)

    r("qos", "latency", ("rtt_samples",), lambda c: value("latency", qos.latency(c.rtt_samples), "s",
                                                         samples=len(c.rtt_samples)))
    r("qos", "interarrival", recs, lambda c: series("interarrival", qos.interarrival(c.packet_records), "s",
                                                   range(1, len(c.packet_records))))
    r("qos", "jitter", recs, lambda c: series("jitter", qos.jitter(c.packet_records), "s"))
    r("qos", "clock_skew", recs, lambda c: series("clock_skew", qos.clock_skew(c.packet_records), "s"))
    r("qos", "bandwidth", recs, lambda c: series("bandwidth", qos.bandwidth(c.packet_records), "bit/s",
                                                window_s=1.0))
    r("qos", "plr", recs, lambda c: value("plr", qos.plr(c.packet_records), "fraction",
                                          denominator="received packets"))

    def pld(c):
        k = int(c.options.get("pld_k", DEFAULT_PLD_K))
        vals, sparse = qos.pld(c.packet_records, k)
        return series("pld", vals, "fraction", k_intervals=k, sparse_intervals=sparse)
    r("qos", "pld", recs, pld)

    r("bs", "framing_rx", ("rx_encoded",), lambda c: _framing("framing_rx", c.rx_encoded))
    r("bs", "framing_ref", ("ref_encoded",), lambda c: _framing("framing_ref", c.ref_encoded))
    r("bs", "gop_sizes", ("rx_encoded",), lambda c: series("gop_sizes", _gops(c), "frames"))

    def gop_size(c):
        est, fallback = bs.gop_size_estimate(_gops(c))
        notes = {"fallback_full_mean": True} if fallback else {}
        return value("gop_size", est, "frames", **notes)
    r("bs", "gop_size", ("rx_encoded",), gop_size)

    def iframe_loss(c):
        gops = _gops(c)
        count, rate = bs.iframe_loss(gops)
        est, _ = bs.gop_size_estimate(gops)
        return value("iframe_loss", rate, "fraction", count=count, received_iframes=len(gops) + 1,
                     strict_count=bs.iframe_loss_strict(gops, est), rate_rule=IFRAME_RATE_RULE)
    r("bs", "iframe_loss", ("rx_encoded",), iframe_loss)

    raw = ("rx_raw", "ref_raw")
    r("vq", "psnr", raw, lambda c: series("psnr", _psnr(c), "dB", _frame_xs(c, len(_psnr(c))),
                                          plane="luma", clamp_db=vq.PSNR_CLAMP))

    def ssim(c):
        rx, ref, _ = aligned(c)
        vals = vq.ssim_series(rx, ref)
        return series("ssim", vals, "index", _frame_xs(c, len(vals)), plane="luma")
    r("vq", "ssim", raw, ssim)
    r("vq", "mos", raw, lambda c: series("mos", _mos(c), "score", _frame_xs(c, len(_mos(c))),
                                         mos_table=[list(t) for t in _mos_table(c)]))

    def mos_hist(c):
        counts = Counter(_mos(c))
        return MeasureResult("mos_hist", "histogram", "frames", [(s, counts.get(s, 0)) for s in range(1, 6)])
    r("vq", "mos_hist", raw, mos_hist)

    div_req = raw + ("ref_encoded",)
    r("vq", "div", div_req, lambda c: value("div", vq.div_from_mos(_mos(c), _ref_mos(c)), "fraction",
                                            rule=DIV_RULE))

    def div_intervals(c):
        k = int(c.options.get("pld_k", DEFAULT_PLD_K))
        return series("div_intervals", vq.div_intervals(_mos(c), _ref_mos(c), k), "fraction",
                      k_intervals=k, rule=DIV_RULE)
    r("vq", "div_intervals", div_req, div_intervals)

    def g1070(c):
        coeffs = c.options["g1070"]
        if not isinstance(coeffs, vq.G1070Coefficients):
            coeffs = vq.G1070Coefficients.from_mapping(coeffs)
        br = float(c.session_meta["bitrate_kbps"])
        fr = float(c.session_meta["fps"])
        ppl = 100.0 * qos.plr(c.packet_records)
        return value("g1070", vq.g1070_vq(coeffs, br, fr, ppl), "score",
                     br_v=br, fr_v=fr, ppl_v=ppl, coefficients=coeffs.as_dict())
    r("vq", "g1070", recs + ("session_meta.bitrate_kbps", "session_meta.fps", "options.g1070"), g1070)
    return reg


def default_registry() -> MeterRegistry:
    return register_builtins(MeterRegistry())
