"""Tool configuration: an INI file read with :mod:`configparser`.

Sections and keys (all optional unless noted)::

    [session]   video_id (required for run), gop_size, quant_shift, fps ("25" or "30000/1001"),
                transport, rtp_port, control_host, control_port, multicast_group, pacing,
                send_to, mtu_payload, idle_timeout, rtt_probes
    [database]  dir
    [impair]    loss, port        (loss > 0 puts a proxy in front of the receiver in `vt run`)
    [analysis]  measures (comma separated; default all), pld_k, mos_table (JSON rows [dB, score, strict])
    [g1070]     v1 .. v12
    [run]       output_dir, seed
"""

from __future__ import annotations

import configparser
import json
from dataclasses import dataclass, field
from pathlib import Path

from .metrics.builtin import BUILTIN_MEASURES, DEFAULT_PLD_K
from .metrics.vq import DEFAULT_MOS_TABLE, G1070Coefficients
from .net.session import SessionConfig


class ConfigError(ValueError):
    pass


SCHEMA: dict[str, dict[str, type]] = {
    "session": {
        "video_id": str, "gop_size": int, "quant_shift": int, "fps": str, "transport": str, "rtp_port": int,
        "control_host": str, "control_port": int, "multicast_group": str, "pacing": float, "send_to": str,
        "mtu_payload": int, "idle_timeout": float, "rtt_probes": int,
    },
    "database": {"dir": str},
    "impair": {"loss": float, "port": int},
    "analysis": {"measures": str, "pld_k": int, "mos_table": str},
    "g1070": {f"v{i}": float for i in range(1, 13)},
    "run": {"output_dir": str, "seed": int},
}


@dataclass
class ToolConfig:
    session: dict = field(default_factory=dict)
    database_dir: Path | None = None
    loss_p: float = 0.0
    impair_port: int = 0
    measures: list[str] = field(default_factory=lambda: list(BUILTIN_MEASURES))
    pld_k: int = DEFAULT_PLD_K
    mos_table: tuple = DEFAULT_MOS_TABLE
    g1070: G1070Coefficients | None = None
    output_dir: Path = Path("vt-out")
    seed: int = 0
    source: str = "<defaults>"

    def session_config(self, **overrides) -> SessionConfig:
        values = dict(self.session)
        values.update({k: v for k, v in overrides.items() if v is not None})
        if "video_id" not in values:
            raise ConfigError(f"{self.source}: [session] video_id is required")
        fps = values.pop("fps", None)
        if fps is not None:
            values["fps_num"], values["fps_den"] = parse_fps(fps)
        try:
            return SessionConfig(**values)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.source}: [session] {exc}") from None

    def analysis_options(self) -> dict:
        opts = {"pld_k": self.pld_k, "mos_table": self.mos_table}
        if self.g1070 is not None:
            opts["g1070"] = self.g1070
        return opts


def parse_fps(text) -> tuple[int, int]:
    num, _, den = str(text).partition("/")
    try:
        n, d = int(num), int(den or 1)
    except ValueError:
        raise ValueError(f"bad frame rate {text!r}") from None
    if n <= 0 or d <= 0:
        raise ValueError(f"bad frame rate {text!r}")
    return n, d


def parse_mos_table(text: str) -> tuple:
    rows = json.loads(text)
    table = tuple((float(t), int(s), bool(strict)) for t, s, strict in rows)
    if any(b[0] > a[0] for a, b in zip(table, table[1:])):
        raise ValueError("mos_table thresholds must be in decreasing order")
    return table


def load_config(path) -> ToolConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = ToolConfig(source=str(path))
    g1070 = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            where = f"{path}: [{section}] {key}"
            typ = SCHEMA[section].get(key)
            if typ is None:
                raise ConfigError(f"{where}: unknown key")
            try:
                val = typ(raw)
            except ValueError:
                raise ConfigError(f"{where}: expected {typ.__name__}, got {raw!r}") from None
            try:
                _apply(cfg, section, key, val, g1070)
            except (ValueError, json.JSONDecodeError) as exc:
                raise ConfigError(f"{where}: {exc}") from None
    if g1070:
        missing = [f"v{i}" for i in range(1, 13) if f"v{i}" not in g1070]
        if missing:
            raise ConfigError(f"{path}: [g1070] missing {', '.join(missing)}")
        cfg.g1070 = G1070Coefficients.from_mapping(g1070)
    if cfg.database_dir is not None and not cfg.database_dir.is_absolute():
        cfg.database_dir = path.parent / cfg.database_dir
    return cfg


def _apply(cfg: ToolConfig, section: str, key: str, val, g1070: dict) -> None:
    if section == "session":
        if key == "fps":
            parse_fps(val)
        cfg.session[key] = val
    elif section == "database":
        cfg.database_dir = Path(val)
    elif section == "impair":
        if key == "loss":
            if not 0 <= val <= 1:
                raise ValueError("loss must be within [0, 1]")
            cfg.loss_p = val
        else:
            cfg.impair_port = val
    elif section == "analysis":
        if key == "measures":
            cfg.measures = [m.strip() for m in val.split(",") if m.strip()]
        elif key == "pld_k":
            if val < 1:
                raise ValueError("pld_k must be >= 1")
            cfg.pld_k = val
        else:
            cfg.mos_table = parse_mos_table(val)
    elif section == "g1070":
        g1070[key] = val
    elif section == "run":
        if key == "output_dir":
            cfg.output_dir = Path(val)
        else:
            cfg.seed = val
