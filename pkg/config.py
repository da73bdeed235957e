from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, replace
from io import StringIO
from pathlib import Path

from dotenv import load_dotenv

from models import WALLS, SolverConfig

load_dotenv()

GEOMETRIES = ("chord", "half_disk", "translator", "expression")
REFERENCES = ("auto", "none", "stationary_chord", "shrinking_half_disk", "strip_translator")
SCHEMES = ("convex_splitting", "stabilized")
DEFAULT_H_FACTOR = 0.25
DEFAULT_TAU_FACTOR = 0.25


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Settings:
    """Process-wide settings read from the environment (and ``.env``)."""

    output_dir: Path = Path("runs")
    cache_dir: Path = Path("data")
    threads: int = 1
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> Settings:
        threads = os.getenv("PHASEFIELD_THREADS", "1")
        try:
            n_threads = max(1, int(threads))
        except ValueError as exc:
            raise ConfigError(f"PHASEFIELD_THREADS must be an integer, got {threads!r}") from exc
        return cls(
            output_dir=Path(os.getenv("PHASEFIELD_OUTPUT_DIR", "runs")),
            cache_dir=Path(os.getenv("PHASEFIELD_CACHE_DIR", "data")),
            threads=n_threads,
            log_level=os.getenv("PHASEFIELD_LOG_LEVEL", "INFO").upper(),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment as read from an INI file.

    Lengths are in domain units, angles in radians, times absolute. ``h`` and
    ``tau`` default to eps/4 and tau_factor * eps^2 for each eps of the list.
    """

    name: str = "experiment"
    lx: float = 1.0
    ly: float = 1.0
    h: float | None = None
    walls: dict[str, str] = field(default_factory=lambda: {w: "neumann" for w in WALLS})
    alpha: float = math.pi / 2
    eps_list: tuple[float, ...] = (0.05,)
    scheme: str = "convex_splitting"
    tau: float | None = None
    tau_factor: float = DEFAULT_TAU_FACTOR
    stabilization: float = 2.0
    t_end: float = 0.01
    snapshot_stride: int | None = None
    geometry: str = "chord"
    radius: float = 0.3
    center_x: float | None = None
    x0: float | None = None
    y0: float | None = None
    expression: str = ""
    perturbation: float = 0.0
    reference: str = "auto"
    contact_band: tuple[float, float] = (3.0, 12.0)
    output_dir: Path | None = None

    # -- derived ---------------------------------------------------------

    @property
    def eps(self) -> float:
        return self.eps_list[0]

    @property
    def contact_walls(self) -> tuple[str, ...]:
        return tuple(w for w in WALLS if self.walls.get(w) == "contact")

    def spacing(self, eps: float | None = None) -> float:
        eps = self.eps if eps is None else eps
        return self.h if self.h is not None else DEFAULT_H_FACTOR * eps

    def time_step(self, eps: float | None = None) -> float:
        eps = self.eps if eps is None else eps
        return self.tau if self.tau is not None else self.tau_factor * eps * eps

    def solver_config(self, eps: float | None = None, t_end: float | None = None) -> SolverConfig:
        return SolverConfig(
            tau=self.time_step(eps),
            t_end=self.t_end if t_end is None else t_end,
            scheme=self.scheme,
            stabilization=self.stabilization,
            snapshot_stride=self.snapshot_stride,
        )

    def reference_kind(self) -> str | None:
        if self.reference == "none":
            return None
        if self.reference != "auto":
            return self.reference
        return {
            "chord": "stationary_chord",
            "half_disk": "shrinking_half_disk",
            "translator": "strip_translator",
        }.get(self.geometry)

    def with_eps(self, eps: float) -> ExperimentConfig:
        return replace(self, eps_list=(eps,))

    def digest(self, eps: float | None = None) -> str:
        """Hash of everything that determines the trajectory except its end time."""
        payload = asdict(self.with_eps(self.eps if eps is None else eps))
        for key in ("t_end", "name", "output_dir", "reference", "contact_band", "snapshot_stride"):
            payload.pop(key)
        payload["h"] = self.spacing(eps)
        payload["tau"] = self.time_step(eps)
        text = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    # -- parsing ---------------------------------------------------------

    @classmethod
    def from_text(cls, text: str, name: str = "experiment") -> ExperimentConfig:
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed experiment file: {exc}") from exc
        try:
            config = cls._from_parser(parser, name)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> ExperimentConfig:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"experiment file {path} not found")
        return cls.from_text(path.read_text(), name=path.stem)

    @classmethod
    def _from_parser(cls, parser: configparser.ConfigParser, name: str) -> ExperimentConfig:
        def get(section: str, key: str, default=None):
            if parser.has_option(section, key):
                return parser.get(section, key).strip()
            return default

        def number(section: str, key: str, default=None):
            raw = get(section, key)
            return default if raw in (None, "") else float(raw)

        walls = {w: "neumann" for w in WALLS}
        if parser.has_section("walls"):
            for key, value in parser.items("walls"):
                if key not in WALLS:
                    raise ConfigError(f"unknown wall {key!r} in [walls]")
                walls[key] = value.strip().lower()

        alpha = number("model", "alpha")
        alpha_deg = number("model", "alpha_deg")
        if alpha is not None and alpha_deg is not None:
            raise ConfigError("give either alpha or alpha_deg in [model], not both")
        if alpha_deg is not None:
            alpha = math.radians(alpha_deg)

        eps_raw = get("phase_field", "eps_list") or get("phase_field", "eps")
        eps_list = tuple(float(v) for v in eps_raw.replace(",", " ").split()) if eps_raw else (0.05,)

        stride = get("solver", "snapshot_stride")
        lo = number("diagnostics", "contact_band_lo", 3.0)
        hi = number("diagnostics", "contact_band_hi", 12.0)
        out = get("output", "directory")

        return cls(
            name=get("output", "name", name),
            lx=number("domain", "lx", 1.0),
            ly=number("domain", "ly", 1.0),
            h=number("domain", "h"),
            walls=walls,
            alpha=math.pi / 2 if alpha is None else alpha,
            eps_list=eps_list,
            scheme=get("solver", "scheme", "convex_splitting"),
            tau=number("solver", "tau"),
            tau_factor=number("solver", "tau_factor", DEFAULT_TAU_FACTOR),
            stabilization=number("solver", "stabilization", 2.0),
            t_end=number("solver", "t_end", 0.01),
            snapshot_stride=int(stride) if stride else None,
            geometry=get("initial", "geometry", "chord"),
            radius=number("initial", "radius", 0.3),
            center_x=number("initial", "center_x"),
            x0=number("initial", "x0"),
            y0=number("initial", "y0"),
            expression=get("initial", "expression", ""),
            perturbation=number("initial", "perturbation", 0.0),
            reference=get("reference", "flow", "auto"),
            contact_band=(lo, hi),
            output_dir=Path(out) if out else None,
        )

    def validate(self) -> None:
        if self.lx <= 0 or self.ly <= 0:
            raise ConfigError("domain extents must be positive")
        for wall, condition in self.walls.items():
            if condition not in ("contact", "neumann"):
                raise ConfigError(f"wall {wall}: unknown condition {condition!r}")
        if not 0.0 < self.alpha < math.pi:
            raise ConfigError(f"contact angle {self.alpha} outside (0, pi)")
        if not self.eps_list or any(e <= 0 for e in self.eps_list):
            raise ConfigError("eps values must be positive")
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ConfigError("eps_list must be strictly decreasing")
        if self.h is not None and any(e < 4.0 * self.h * (1 - 1e-12) for e in self.eps_list):
            raise ConfigError(f"h={self.h} does not resolve eps (need eps >= 4 h)")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.t_end <= 0:
            raise ConfigError("t_end must be positive")
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"unknown initial geometry {self.geometry!r}")
        if self.geometry == "expression" and not self.expression:
            raise ConfigError("geometry 'expression' needs an expression")
        if self.reference not in REFERENCES:
            raise ConfigError(f"unknown reference flow {self.reference!r}")
        kind = self.reference_kind()
        right_angle = abs(math.cos(self.alpha)) < 1e-12
        if kind == "strip_translator" and not {"left", "right"} <= set(self.contact_walls):
            raise ConfigError("the translator needs contact walls left and right")
        if kind in ("stationary_chord", "shrinking_half_disk") and self.contact_walls and not right_angle:
            raise ConfigError(f"reference {kind} only exists for alpha = pi/2 on contact walls")
        lo, hi = self.contact_band
        if not 0 <= lo < hi:
            raise ConfigError("contact band needs 0 <= lo < hi")

    def to_text(self) -> str:
        """INI rendering that round-trips through :meth:`from_text`."""
        parser = configparser.ConfigParser()
        parser["domain"] = {"lx": repr(self.lx), "ly": repr(self.ly)}
        if self.h is not None:
            parser["domain"]["h"] = repr(self.h)
        parser["walls"] = dict(self.walls)
        parser["model"] = {"alpha": repr(self.alpha)}
        parser["phase_field"] = {"eps_list": " ".join(repr(e) for e in self.eps_list)}
        solver = {
            "scheme": self.scheme,
            "tau_factor": repr(self.tau_factor),
            "stabilization": repr(self.stabilization),
            "t_end": repr(self.t_end),
        }
        if self.tau is not None:
            solver["tau"] = repr(self.tau)
        if self.snapshot_stride is not None:
            solver["snapshot_stride"] = str(self.snapshot_stride)
        parser["solver"] = solver
        initial = {
            "geometry": self.geometry,
            "radius": repr(self.radius),
            "perturbation": repr(self.perturbation),
        }
        for key in ("center_x", "x0", "y0"):
            value = getattr(self, key)
            if value is not None:
                initial[key] = repr(value)
        if self.expression:
            initial["expression"] = self.expression
        parser["initial"] = initial
        parser["reference"] = {"flow": self.reference}
        parser["diagnostics"] = {
            "contact_band_lo": repr(self.contact_band[0]),
            "contact_band_hi": repr(self.contact_band[1]),
        }
        parser["output"] = {"name": self.name}
        if self.output_dir is not None:
            parser["output"]["directory"] = str(self.output_dir)

        buffer = StringIO()
        parser.write(buffer)
        return buffer.getvalue()
