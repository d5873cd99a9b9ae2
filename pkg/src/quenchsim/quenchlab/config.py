"""Declarative experiment configs: a flat, commented key-value format.

A document is a sequence of ``[section]`` headers and ``key = value`` lines;
``#`` starts a comment. Keys are unique across the whole document and every
key must belong to its section's schema, so typos fail loudly with a line
number. Frequencies are quoted the way device papers quote them, as
``value/2pi`` in MHz.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "TABLE_S1_U_MHZ"]

# Alternating odd/even anharmonicity magnitudes of a typical ten-transmon
# device, used as the default profile (cycled when the chain is not ten
# sites long).
TABLE_S1_U_MHZ = (212.0, 264.0, 210.0, 268.0, 212.0, 268.0, 214.0, 264.0, 214.0, 264.0)

MODES = ("time-reversal", "one-direction-compare", "single-run", "spectrum")
DRIVE_KINDS = ("none", "staggered-odd")
FORMATS = ("csv", "json")
OBSERVABLES = ("fidelity", "populations", "pauli", "entropy", "anharmonicity")

# section -> keys allowed there
SCHEMA = {
    "lattice": {"sites", "levels"},
    "profiles": {
        "coupling_mhz",
        "anharmonicity_mhz",
        "transverse_mhz",
        "coupling_and_field_mhz",
    },
    "state": {"initial"},  # plus amplitudes_q<j>, validated dynamically
    "protocol": {
        "mode",
        "forward_ns",
        "assumed_forward_ns",
        "duration_ns",
        "assumed_duration_ns",
        "drive",
        "drive_frequency_mhz",
        "drive_forward_mhz",
        "drive_backward_mhz",
        "drive_pattern_mhz",
        "drive_substep_ns",
        "sector",
    },
    "sampling": {"dt_ns", "stroboscopic", "record_states"},
    "observables": {"observables"},
    "spectrum": {"particles"},
    "output": {"path", "format", "seed"},
    "sweep": {"parallelism"},  # plus axis_<key>, validated dynamically
    "meta": {"comment"},
}

_KEY_SECTION = {k: s for s, keys in SCHEMA.items() for k in keys}


class ConfigError(ValueError):
    """Config parsing or validation failure, with line/key context."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        ctx = []
        if line is not None:
            ctx.append(f"line {line}")
        if key is not None:
            ctx.append(f"key {key!r}")
        super().__init__(f"{message}" + (f" ({', '.join(ctx)})" if ctx else ""))
        self.line = line
        self.key = key


def _parse_document(text: str) -> dict:
    """Text -> ordered {key: (value, line)} map, section-checked."""
    entries: dict[str, tuple[str, int]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        if section is None:
            raise ConfigError("key outside any [section]", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        ok = (
            key in SCHEMA[section]
            or (section == "state" and key.startswith("amplitudes_q"))
            or (section == "sweep" and key.startswith("axis_"))
            or key == "comment"
        )
        if not ok:
            raise ConfigError(f"unknown key in [{section}]", line=lineno, key=key)
        if key in entries and key != "comment":
            raise ConfigError("duplicate key", line=lineno, key=key)
        entries[key] = (value, lineno)
    return entries


def _want_float(entries, key, default=None):
    if key not in entries:
        return default
    value, line = entries[key]
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"expected a number, got {value!r}", line=line, key=key) from None


def _want_int(entries, key, default=None):
    if key not in entries:
        return default
    value, line = entries[key]
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"expected an integer, got {value!r}", line=line, key=key) from None


def _want_bool(entries, key, default=False):
    if key not in entries:
        return default
    value, line = entries[key]
    low = value.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected true/false, got {value!r}", line=line, key=key)


def _want_choice(entries, key, choices, default):
    if key not in entries:
        return default
    value, line = entries[key]
    if value not in choices:
        raise ConfigError(
            f"expected one of {', '.join(choices)}; got {value!r}", line=line, key=key
        )
    return value


def _float_list(entries, key, n, default_scalar=None, keywords=()):
    """Parse a scalar (broadcast to n) or a comma list of exactly n floats."""
    if key not in entries:
        if default_scalar is None:
            return None
        return (float(default_scalar),) * n
    value, line = entries[key]
    if value.lower() in keywords:
        return value.lower()
    parts = [p.strip() for p in value.split(",") if p.strip()]
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"expected numbers, got {value!r}", line=line, key=key) from None
    if len(vals) == 1:
        return vals * n
    if len(vals) != n:
        raise ConfigError(f"expected 1 or {n} values, got {len(vals)}", line=line, key=key)
    return vals


@dataclass
class ExperimentConfig:
    """Validated parameters for one experiment run.

    Produced by load_config; fields mirror the document keys with profile
    lists broadcast to full length and frequencies kept in the quoted
    value/2pi MHz convention (conversion to angular units happens when
    operators are built).
    """

    sites: int
    levels: int
    coupling_mhz: tuple
    anharmonicity_mhz: tuple
    transverse_mhz: tuple
    initial_tokens: str | None
    initial_amplitudes: tuple | None
    mode: str
    forward_ns: float | None
    duration_ns: float | None
    drive_kind: str
    drive_frequency_mhz: float | None
    drive_forward_mhz: float | None
    drive_backward_mhz: float | None
    drive_pattern_mhz: tuple | None
    drive_substep_ns: float | None
    sector: str | int
    dt_ns: float
    stroboscopic: bool
    record_states: bool
    observables: tuple
    spectrum_particles: int | None
    output_path: str | None
    output_format: str
    seed: int
    sweep_axes: dict = field(default_factory=dict)
    parallelism: int = 1
    comment: str = ""
    raw: dict = field(default_factory=dict)
    source_text: str = ""

    def with_overrides(self, overrides: dict) -> "ExperimentConfig":
        """Revalidate with key -> value-string overrides applied."""
        raw = {k: v for k, (v, _) in self.raw.items()}
        for key, value in overrides.items():
            key = key.lower()
            if key not in _KEY_SECTION and not key.startswith("amplitudes_q"):
                raise ConfigError("unknown override key", key=key)
            raw[key] = str(value)
        entries = {k: (v, 0) for k, v in raw.items()}
        return _validate(entries, source_text=self.source_text)


def _validate(entries: dict, source_text: str = "") -> ExperimentConfig:
    sites = _want_int(entries, "sites")
    if sites is None:
        raise ConfigError("missing required key", key="sites")
    if sites < 1:
        raise ConfigError(f"need at least one site, got {sites}", key="sites")
    levels = _want_int(entries, "levels", 3)
    if levels < 2:
        raise ConfigError(f"need at least two levels, got {levels}", key="levels")

    both = _float_list(entries, "coupling_and_field_mhz", 1)
    coupling = _float_list(entries, "coupling_mhz", max(sites - 1, 1), default_scalar=10.8)
    transverse = _float_list(entries, "transverse_mhz", sites, default_scalar=0.0)
    if both is not None:
        coupling = (both[0],) * max(sites - 1, 1)
        transverse = (both[0],) * sites
    if sites == 1:
        coupling = ()
    elif len(coupling) != sites - 1:
        raise ConfigError(
            f"coupling needs {sites - 1} bond values, got {len(coupling)}",
            key="coupling_mhz",
        )
    anh = _float_list(
        entries, "anharmonicity_mhz", sites, default_scalar=None, keywords=("table-s1",)
    )
    if anh is None or anh == "table-s1":
        anh = tuple(TABLE_S1_U_MHZ[j % len(TABLE_S1_U_MHZ)] for j in range(sites))
    if any(u < 0 for u in anh):
        raise ConfigError("anharmonicity magnitudes must be non-negative", key="anharmonicity_mhz")

    # Initial state: token string or per-site amplitude pairs.
    amp_keys = sorted(k for k in entries if k.startswith("amplitudes_q"))
    tokens = entries.get("initial", (None, None))[0]
    amplitudes = None
    if amp_keys:
        if tokens is not None:
            raise ConfigError("give either initial tokens or amplitude pairs, not both",
                              key="initial")
        pairs: list[tuple[complex, complex]] = []
        for j in range(1, sites + 1):
            key = f"amplitudes_q{j}"
            if key not in entries:
                raise ConfigError(f"missing {key} (sites are 1..{sites})", key=key)
            value, line = entries[key]
            parts = [p.strip() for p in value.split(",")]
            if len(parts) != 2:
                raise ConfigError("expected 'amp0, amp1'", line=line, key=key)
            try:
                pairs.append((complex(parts[0]), complex(parts[1])))
            except ValueError:
                raise ConfigError(f"bad complex amplitude {value!r}", line=line, key=key) from None
        for k in amp_keys:
            suffix = k.removeprefix("amplitudes_q")
            if not suffix.isdigit() or not 1 <= int(suffix) <= sites:
                raise ConfigError("amplitude pair for a site beyond the chain", key=k)
        amplitudes = tuple(pairs)
    elif tokens is not None:
        line = entries["initial"][1]
        if len(tokens) != sites:
            raise ConfigError(
                f"initial state has {len(tokens)} tokens for {sites} sites",
                line=line, key="initial",
            )
        for tok in tokens:
            if tok == "+":
                continue
            if not tok.isdigit():
                raise ConfigError(f"unknown token {tok!r}", line=line, key="initial")
            if int(tok) >= levels:
                raise ConfigError(
                    f"token {tok} outside levels 0..{levels - 1}", line=line, key="initial"
                )

    mode = _want_choice(entries, "mode", MODES, "single-run")
    forward = _want_float(entries, "forward_ns")
    if forward is None:
        forward = _want_float(entries, "assumed_forward_ns")
    duration = _want_float(entries, "duration_ns")
    if duration is None:
        duration = _want_float(entries, "assumed_duration_ns")

    drive_kind = _want_choice(entries, "drive", DRIVE_KINDS, "none")
    drive_freq = _want_float(entries, "drive_frequency_mhz")
    drive_fwd = _want_float(entries, "drive_forward_mhz")
    drive_bwd = _want_float(entries, "drive_backward_mhz")
    drive_pattern = _float_list(entries, "drive_pattern_mhz", sites)
    drive_substep = _want_float(entries, "drive_substep_ns")
    driven = drive_kind != "none" or drive_pattern is not None
    if driven:
        if drive_freq is None or not drive_freq > 0:
            raise ConfigError("driven protocols need drive_frequency_mhz > 0",
                              key="drive_frequency_mhz")
        if drive_pattern is None and drive_fwd is None:
            raise ConfigError("staggered-odd drive needs drive_forward_mhz",
                              key="drive_forward_mhz")

    sector_raw = entries.get("sector", ("auto", None))[0]
    sector: str | int
    if sector_raw in ("auto", "full"):
        sector = sector_raw
    else:
        try:
            sector = int(sector_raw)
        except ValueError:
            raise ConfigError(
                f"sector must be auto, full or an integer; got {sector_raw!r}", key="sector"
            ) from None
        if not 0 <= sector <= sites * (levels - 1):
            raise ConfigError(f"sector {sector} outside the chain's range", key="sector")
        if any(v != 0 for v in transverse):
            raise ConfigError("a transverse field breaks number conservation; "
                              "a fixed sector cannot be used", key="sector")

    dt_ns = _want_float(entries, "dt_ns", 1.0)
    if not dt_ns > 0:
        raise ConfigError("dt_ns must be positive", key="dt_ns")
    strobo = _want_bool(entries, "stroboscopic")
    record_states = _want_bool(entries, "record_states")
    if strobo and not driven:
        raise ConfigError("stroboscopic sampling requires a drive", key="stroboscopic")

    if "observables" in entries:
        value, line = entries["observables"]
        obs = tuple(p.strip().lower() for p in value.split(",") if p.strip())
        for o in obs:
            if o not in OBSERVABLES:
                raise ConfigError(
                    f"unknown observable {o!r} (choices: {', '.join(OBSERVABLES)})",
                    line=line, key="observables",
                )
    else:
        obs = ("fidelity", "populations")

    particles = _want_int(entries, "particles")

    # Mode-specific requirements.
    if mode == "time-reversal" and forward is None:
        raise ConfigError("time-reversal mode needs forward_ns (or assumed_forward_ns)",
                          key="forward_ns")
    if mode in ("single-run", "one-direction-compare") and duration is None:
        raise ConfigError(f"{mode} mode needs duration_ns (or assumed_duration_ns)",
                          key="duration_ns")
    if mode == "one-direction-compare" and driven:
        raise ConfigError("one-direction-compare does not support a drive", key="drive")
    if mode == "spectrum":
        if particles is None:
            raise ConfigError("spectrum mode needs [spectrum] particles", key="particles")
        if not 0 <= particles <= sites * (levels - 1):
            raise ConfigError(f"particles {particles} outside the chain's range",
                              key="particles")
    if mode != "spectrum" and tokens is None and amplitudes is None:
        raise ConfigError("missing initial state", key="initial")

    axes = {}
    for key in entries:
        if key.startswith("axis_"):
            target = key.removeprefix("axis_")
            if target not in _KEY_SECTION or _KEY_SECTION[target] == "sweep":
                raise ConfigError("axis does not refer to a config key", key=key)
            value, line = entries[key]
            values = [p.strip() for p in value.split(",") if p.strip()]
            if not values:
                raise ConfigError("empty axis", line=line, key=key)
            axes[target] = values
    parallelism = _want_int(entries, "parallelism", 1)
    if parallelism < 1:
        raise ConfigError("parallelism must be at least 1", key="parallelism")

    comment = entries.get("comment", ("", None))[0]

    return ExperimentConfig(
        sites=sites,
        levels=levels,
        coupling_mhz=tuple(coupling),
        anharmonicity_mhz=tuple(anh),
        transverse_mhz=tuple(transverse),
        initial_tokens=tokens,
        initial_amplitudes=amplitudes,
        mode=mode,
        forward_ns=forward,
        duration_ns=duration,
        drive_kind=drive_kind,
        drive_frequency_mhz=drive_freq,
        drive_forward_mhz=drive_fwd,
        drive_backward_mhz=drive_bwd,
        drive_pattern_mhz=None if drive_pattern is None else tuple(drive_pattern),
        drive_substep_ns=drive_substep,
        sector=sector,
        dt_ns=dt_ns,
        stroboscopic=strobo,
        record_states=record_states,
        observables=obs,
        spectrum_particles=particles,
        output_path=entries.get("path", (None, None))[0],
        output_format=_want_choice(entries, "format", FORMATS, "csv"),
        seed=_want_int(entries, "seed", 0),
        sweep_axes=axes,
        parallelism=parallelism,
        comment=comment,
        raw=dict(entries),
        source_text=source_text,
    )


def load_config(source) -> ExperimentConfig:
    """Load a config from a path or directly from document text.

    A string containing a newline or an ``=`` is treated as document text;
    anything else is a filesystem path.
    """
    if isinstance(source, os.PathLike):
        text = open(os.fspath(source), encoding="utf-8").read()
    elif isinstance(source, str) and ("\n" in source or "=" in source):
        text = source
    else:
        try:
            text = open(source, encoding="utf-8").read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    return _validate(_parse_document(text), source_text=text)
