"""Plain key-value run configuration: sections, `key = value`, `#` comments.

The grammar is deliberately flat and language-agnostic so configs diff
cleanly.  All rates are in units of the lasing-transition spontaneous rate,
which is therefore fixed: a `gamma` key is accepted only with the value 1.
Unknown sections or keys are rejected, with line numbers, as are type
mismatches; validated defaults are echoed into the run manifest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigurationError
from .models import RateParams, SCHEMES, _RELEVANT

JOBS = ("steady", "spectrum", "trajectory", "sweep")

_SWEEP_OUTPUTS = ("photon-stats", "beta", "spectrum", "linewidth")


class ConfigParseError(ConfigurationError):
    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line


def _parse_sections(text: str):
    """-> {section: {key: (raw_value, line_no)}}, insertion-ordered."""
    sections: dict = {}
    current = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if not current:
                raise ConfigParseError("empty section name", line_no)
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {line!r}", line_no)
        if current is None:
            raise ConfigParseError("key outside any [section]", line_no)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigParseError("empty key", line_no)
        if key in sections[current]:
            raise ConfigParseError(f"duplicate key {key!r} in [{current}]", line_no)
        sections[current][key] = (value, line_no)
    return sections


def _convert(kind, raw, key, line):
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            value = int(raw, 10)
            return value
        return raw
    except ValueError:
        raise ConfigParseError(
            f"{key} expects {kind.__name__}, got {raw!r}", line) from None


# per-section key schema: key -> (type, default); REQUIRED means no default
_REQUIRED = object()

_SCHEMA = {
    "run": {"scheme": (str, _REQUIRED), "job": (str, None)},
    "steady": {"start_n_max": (int, 4), "ceiling": (int, 60)},
    "spectrum": {"points": (int, 2001), "half_span": (float, None),
                 "start_n_max": (int, 4), "ceiling": (int, 60)},
    "trajectory": {"t_final": (float, _REQUIRED), "dt": (float, None),
                   "record_stride": (int, 1), "seed": (int, _REQUIRED),
                   "substream": (int, 0), "n_max": (int, None)},
    "sweep": {"param": (str, _REQUIRED), "scale": (str, "log"),
              "start": (float, _REQUIRED), "stop": (float, _REQUIRED),
              "points": (int, _REQUIRED), "outputs": (str, ",".join(_SWEEP_OUTPUTS)),
              "start_n_max": (int, 4), "ceiling": (int, 60),
              "grid_points": (int, 2001)},
}


@dataclass
class RunConfig:
    scheme: str
    job: str
    params: RateParams
    steady: dict = field(default_factory=dict)
    spectrum: dict = field(default_factory=dict)
    trajectory: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)

    def echo(self) -> dict:
        """Fully resolved configuration, defaults included, for the manifest."""
        from dataclasses import asdict
        payload = {
            "scheme": self.scheme,
            "job": self.job,
            "rates": asdict(self.params),
        }
        for name in ("steady", "spectrum", "trajectory", "sweep"):
            section = getattr(self, name)
            if section:
                payload[name] = dict(section)
        return payload


def _parse_section(name, found, job_needs):
    schema = _SCHEMA[name]
    raw = found.get(name, {})
    for key, (value, line) in raw.items():
        if key not in schema:
            raise ConfigParseError(f"unknown key {key!r} in [{name}]", line)
    out = {}
    for key, (kind, default) in schema.items():
        if key in raw:
            value, line = raw[key]
            out[key] = _convert(kind, value, key, line)
        elif default is _REQUIRED:
            if job_needs:
                raise ConfigParseError(
                    f"missing required key {key!r} in [{name}]")
            out[key] = None
        else:
            out[key] = default
    return out


def parse_config(text: str, job: str | None = None) -> RunConfig:
    """Validate config text into a RunConfig; `job` from the CLI wins."""
    sections = _parse_sections(text)
    for name in sections:
        if name not in ("run", "rates") and name not in _SCHEMA:
            raise ConfigParseError(f"unknown section [{name}]")

    run = _parse_section("run", sections, job_needs=True)
    scheme = run["scheme"]
    if scheme not in SCHEMES:
        raise ConfigParseError(
            f"unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}")
    config_job = run.get("job")
    if config_job is not None and config_job not in JOBS:
        raise ConfigParseError(f"unknown job {config_job!r}")
    if job is None:
        job = config_job
    elif config_job is not None and config_job != job:
        raise ConfigParseError(
            f"config requests job {config_job!r} but the command line says {job!r}")
    if job is None:
        raise ConfigParseError("no job given (CLI subcommand or [run] job key)")

    # rates: every parameter the scheme uses must be spelled out, anything
    # else is rejected; gamma is the unit and may only be 1
    rates_raw = sections.get("rates", {})
    relevant = _RELEVANT[scheme]
    values = {}
    for key, (value, line) in rates_raw.items():
        if key == "gamma":
            gamma = _convert(float, value, key, line)
            if gamma != 1.0:
                raise ConfigParseError(
                    "gamma is the rate unit and must be 1 (all rates are "
                    "expressed in units of gamma)", line)
            continue
        if key not in relevant:
            raise ConfigParseError(
                f"rate {key!r} is not used by the {scheme} scheme", line)
        parsed = _convert(float, value, key, line)
        if parsed < 0:
            raise ConfigParseError(f"rate {key!r} must be >= 0", line)
        values[key] = parsed
    missing = [k for k in relevant if k not in values and k != "gamma"]
    if missing:
        raise ConfigParseError(
            f"missing required rate keys for {scheme}: {', '.join(missing)}")
    params = RateParams(gamma=1.0, **values)

    cfg = RunConfig(
        scheme=scheme, job=job, params=params,
        steady=_parse_section("steady", sections, job_needs=(job == "steady")),
        spectrum=_parse_section("spectrum", sections, job_needs=(job == "spectrum")),
        trajectory=_parse_section("trajectory", sections, job_needs=(job == "trajectory")),
        sweep=_parse_section("sweep", sections, job_needs=(job == "sweep")),
    )
    _validate_job_options(cfg)
    return cfg


def _validate_job_options(cfg: RunConfig):
    if cfg.steady["start_n_max"] < 1 or cfg.spectrum["start_n_max"] < 1:
        raise ConfigParseError("start_n_max must be >= 1")
    if cfg.spectrum["points"] < 3:
        raise ConfigParseError("spectrum points must be >= 3")
    hs = cfg.spectrum["half_span"]
    if hs is not None and hs <= 0:
        raise ConfigParseError("half_span must be > 0")
    if cfg.job == "trajectory":
        t = cfg.trajectory
        if t["t_final"] is not None and t["t_final"] <= 0:
            raise ConfigParseError("t_final must be > 0")
        if t["dt"] is not None and t["dt"] <= 0:
            raise ConfigParseError("dt must be > 0")
        if t["record_stride"] < 1:
            raise ConfigParseError("record_stride must be >= 1")
        if t["n_max"] is not None and t["n_max"] < 1:
            raise ConfigParseError("n_max must be >= 1")
    if cfg.job == "sweep":
        s = cfg.sweep
        if s["scale"] not in ("log", "linear"):
            raise ConfigParseError("sweep scale must be 'log' or 'linear'")
        if s["param"] not in _RELEVANT[cfg.scheme]:
            raise ConfigParseError(
                f"sweep param {s['param']!r} is not used by {cfg.scheme}")
        if s["points"] < 1:
            raise ConfigParseError("sweep points must be >= 1")
        outputs = tuple(x.strip() for x in s["outputs"].split(",") if x.strip())
        bad = set(outputs) - set(_SWEEP_OUTPUTS)
        if bad:
            raise ConfigParseError(f"unknown sweep outputs: {', '.join(sorted(bad))}")
        s["outputs"] = outputs
