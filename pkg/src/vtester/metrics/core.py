"""Meter registry: QoS, bitstream and video-quality meters owning named
measures behind one interface.

A measure is a callable ``AnalysisContext -> MeasureResult`` registered with
the context fields it needs. :meth:`MeterRegistry.run` skips measures whose
requirements are absent and records failures instead of raising.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

METERS = ("qos", "bs", "vq")
KINDS = ("value", "series", "histogram")


@dataclass(frozen=True)
class AnalysisContext:
    packet_records: Sequence | None = None
    rtt_samples: Sequence[float] | None = None
    rx_encoded: Any = None
    ref_encoded: Any = None
    rx_raw: Any = None
    ref_raw: Any = None
    decode_report: Any = None
    session_meta: Mapping[str, Any] | None = None
    options: Mapping[str, Any] = field(default_factory=dict)
    # memo for derived data shared between measures (aligned videos, PSNR...)
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def has(self, requirement: str) -> bool:
        head, _, key = requirement.partition(".")
        value = getattr(self, head, None)
        if value is None:
            return False
        if key:
            return isinstance(value, Mapping) and value.get(key) is not None
        return True

    def cached(self, key: str, compute: Callable[[], Any]) -> Any:
        if key not in self._cache:
            self._cache[key] = compute()
        return self._cache[key]


@dataclass
class MeasureResult:
    name: str
    kind: str
    units: str
    data: Any
    meter: str = ""
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown result kind {self.kind!r}")
        if self.kind == "value":
            self.data = float(self.data)
        else:
            self.data = [(float(x), float(y)) for x, y in self.data]
            if self.kind == "series":
                xs = [x for x, _ in self.data]
                if any(b <= a for a, b in zip(xs, xs[1:])):
                    raise ValueError(f"series {self.name!r} x values are not strictly increasing")

    @property
    def skipped(self) -> bool:
        return False

    def to_dict(self) -> dict:
        return {"name": self.name, "meter": self.meter, "kind": self.kind, "units": self.units,
                "data": self.data if self.kind == "value" else [list(p) for p in self.data],
                "notes": self.notes}


@dataclass
class Skip:
    name: str
    reason: str
    meter: str = ""

    @property
    def skipped(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {"name": self.name, "meter": self.meter, "skipped": self.reason}


def series(name: str, ys: Sequence[float], units: str, xs: Sequence[float] | None = None, **notes) -> MeasureResult:
    if xs is None:
        xs = range(len(ys))
    return MeasureResult(name, "series", units, list(zip(xs, ys)), notes=notes)


def value(name: str, v: float, units: str, **notes) -> MeasureResult:
    return MeasureResult(name, "value", units, v, notes=notes)


@dataclass(frozen=True)
class Measure:
    meter: str
    name: str
    requires: tuple[str, ...]
    compute: Callable[[AnalysisContext], MeasureResult]


class DuplicateMeasureError(ValueError):
    pass


class MeterRegistry:
    def __init__(self):
        self._meters: dict[str, dict[str, Measure]] = {m: {} for m in METERS}

    def register(self, meter: str, name: str, requirements: Sequence[str],
                 compute: Callable[[AnalysisContext], MeasureResult]) -> None:
        if meter not in self._meters:
            raise ValueError(f"unknown meter {meter!r}; expected one of {METERS}")
        if name in self._meters[meter]:
            raise DuplicateMeasureError(f"measure {name!r} already registered in meter {meter!r}")
        self._meters[meter][name] = Measure(meter, name, tuple(requirements), compute)

    def measure(self, meter: str, name: str, requires: Sequence[str] = ()):
        """Decorator form of :meth:`register`."""
        def wrap(fn):
            self.register(meter, name, requires, fn)
            return fn
        return wrap

    def names(self, meter: str | None = None) -> list[str]:
        meters = [meter] if meter else list(METERS)
        return [f"{m}.{n}" for m in meters for n in self._meters[m]]

    def lookup(self, name: str) -> Measure | None:
        meter, dot, short = name.partition(".")
        if dot:
            return self._meters.get(meter, {}).get(short)
        hits = [ms[name] for ms in self._meters.values() if name in ms]
        return hits[0] if len(hits) == 1 else None

    def run(self, selected: Sequence[str], ctx: AnalysisContext) -> list[MeasureResult | Skip]:
        results: list[MeasureResult | Skip] = []
        for name in selected:
            m = self.lookup(name)
            if m is None:
                results.append(Skip(name, "unknown measure"))
                continue
            missing = [r for r in m.requires if not ctx.has(r)]
            if missing:
                results.append(Skip(m.name, "missing " + ", ".join(missing), m.meter))
                continue
            try:
                res = m.compute(ctx)
            except Exception as exc:  # noqa: BLE001 - failures are reported per measure
                results.append(Skip(m.name, f"error: {type(exc).__name__}: {exc}", m.meter))
                continue
            res.name, res.meter = m.name, m.meter
            results.append(res)
        return results
