"""Scenario files: parsing, validation and execution.

A scenario is an INI-style file with the sections ``[scenario]``, ``[pump]``,
``[field]``, ``[density]``, ``[initial]`` and ``[numerics]``.  Every key
carries its unit in its name; unknown sections or keys are rejected with the
offending line number.
"""
from __future__ import annotations

import configparser
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .dynamics import IntegrationFailure, energy_gain, integrate_general
from .exact import (AxialB, AxialE, GeneralBzEz, ZeroStatic, autoresonance_diag, case_field,
                    kappa_scan, solve_exact)
from .fields import ConstantUniform
from .io import read_csv, sha256_file, write_csv, write_json
from .kinematics import S_COLLAPSE, SFactorCollapse, XiState, kappa_from_plates
from .oracle import TState, compare, integrate_time
from .plasma import (ProfileDensity, StepDensity, aperp_residual, carrier_phase_sensitivity,
                     invariant_drift, period_estimate, solve_family, solve_step_cauchy)
from .pump import ModulatedCarrier, SampledEnvelope, ZeroPump

KINDS = ("vacuum-general", "vacuum-exact", "plasma-family", "plasma-step", "oracle-compare",
         "kappa-scan", "autoresonance")

SCENARIO_DIR = Path(__file__).with_name("scenarios")


class ConfigError(ValueError):
    """Invalid scenario; the message starts with ``file:line:`` when a line is known."""


class NumericalFailure(RuntimeError):
    pass


# --------------------------------------------------------------------------
# schema


def _positive(x):
    if not x > 0:
        raise ValueError("must be positive")


def _non_negative(x):
    if not x >= 0:
        raise ValueError("must be non-negative")


def _at_least_two(x):
    if x < 2:
        raise ValueError("must be at least 2")


@dataclass(frozen=True)
class Key:
    kind: Any                      # float, int, bool, str, or a tuple of choices
    default: Any = None
    check: Callable | None = None
    help: str = ""


SCHEMA = {
    "scenario": {
        "kind": Key(KINDS, None, help="what to run"),
        "name": Key(str, ""),
        "description": Key(str, ""),
    },
    "pump": {
        "envelope": Key(("gaussian", "bump", "constant", "samples-file", "none"), "gaussian"),
        "wavelength_um": Key(float, 0.8, _positive),
        "a0": Key(float, 1.0, _non_negative, "e a lambda / mc^2"),
        "sigma_um2": Key(float, None, _positive),
        "center_um": Key(float, 0.0),
        "half_width_um": Key(float, None, _positive),
        "polarization": Key(("linear", "circular"), "linear"),
        "phase": Key(float, 0.0, help="carrier phase (rad)"),
        "support_start_um": Key(float, None),
        "support_end_um": Key(float, None),
        "samples_file": Key(str, None, help="CSV with columns xi_um, shape"),
        "intensity_w_cm2": Key(float, None, _non_negative, "documentation only"),
    },
    "field": {
        "e_x_per_um": Key(float, 0.0),
        "e_y_per_um": Key(float, 0.0),
        "kappa_per_um": Key(float, 0.0, help="q E_z / mc^2"),
        "b_x_per_um": Key(float, 0.0),
        "b_y_per_um": Key(float, 0.0),
        "b_per_um": Key(float, None, help="q B_z / mc^2"),
        "plate_potential_volt": Key(float, None),
        "plate_distance_um": Key(float, None, _positive),
    },
    "density": {
        "n0_per_cm3": Key(float, None, _non_negative),
        "profile_file": Key(str, None, help="CSV with columns Z_um, n_per_cm3"),
    },
    "initial": {
        "x_um": Key(float, 0.0), "y_um": Key(float, 0.0), "z_um": Key(float, 0.0),
        "ux": Key(float, 0.0), "uy": Key(float, 0.0), "uz": Key(float, 0.0),
    },
    "numerics": {
        "xi_min_um": Key(float, None),
        "xi_max_um": Key(float, None),
        "xi_step_um": Key(float, None, _positive, "output grid spacing"),
        "rtol": Key(float, 1e-9, _positive),
        "atol": Key(float, 1e-12, _positive),
        "z_points": Key(int, 64, _at_least_two),
        "z_max_um": Key(float, None, _positive),
        "ct_max_um": Key(float, None, _positive),
        "residual_step_um": Key(float, 0.05, _positive),
        "residual_threshold": Key(float, 0.2, _positive),
        "expected_xi_h_um": Key(float, None, _positive),
        "phase_check": Key(bool, False),
        "kappa_min_per_um": Key(float, -0.2),
        "kappa_max_per_um": Key(float, 0.05),
        "kappa_points": Key(int, 51, _at_least_two),
        "compare_samples": Key(int, 2001, _at_least_two),
    },
}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(key: Key, raw: str):
    raw = raw.strip()
    if isinstance(key.kind, tuple):
        if raw not in key.kind:
            raise ValueError(f"must be one of {', '.join(key.kind)}")
        return raw
    if key.kind is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError("must be a boolean")
    if key.kind is int:
        value = int(raw)
    elif key.kind is float:
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError("must be finite")
    else:
        value = raw
    if key.check is not None:
        key.check(value)
    return value


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str):
    """Map (section, key) and section headers to 1-based line numbers."""
    where, section = {}, None
    for n, line in enumerate(text.splitlines(), 1):
        if line.lstrip().startswith(("#", ";")) or not line.strip():
            continue
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), n)
            continue
        if line[:1].isspace():
            continue  # continuation line
        m = _KEY_RE.match(line)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip().lower()), n)
    return where


# --------------------------------------------------------------------------
# scenario


@dataclass
class Scenario:
    kind: str
    values: dict                     # section -> key -> typed value (explicit keys only)
    source: str = "<string>"
    base_dir: Path = field(default_factory=Path.cwd)
    lines: dict = field(default_factory=dict, repr=False)

    def get(self, section, key):
        if key in self.values.get(section, {}):
            return self.values[section][key]
        return SCHEMA[section][key].default

    def has(self, section, key):
        return key in self.values.get(section, {})

    @property
    def name(self):
        return self.get("scenario", "name") or Path(self.source).stem

    def anchor(self, section, key=None):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        return f"{self.source}:{line}" if line else self.source

    def error(self, section, key, message):
        return ConfigError(f"{self.anchor(section, key)}: [{section}] {key}: {message}")

    def to_dict(self):
        """Explicit values with file references made absolute (for manifests)."""
        out = {s: dict(v) for s, v in self.values.items()}
        for section, key in (("pump", "samples_file"), ("density", "profile_file")):
            if key in out.get(section, {}):
                out[section][key] = str(self.resolve(out[section][key]))
        return out

    @classmethod
    def from_dict(cls, data: dict, source="<manifest>") -> "Scenario":
        text = "\n".join(f"[{s}]\n" + "\n".join(f"{k} = {_render(v)}" for k, v in keys.items())
                         for s, keys in data.items())
        return loads(text, source)

    def resolve(self, name) -> Path:
        p = Path(name)
        return p if p.is_absolute() else (self.base_dir / p).resolve()

    def with_overrides(self, **numerics) -> "Scenario":
        values = {s: dict(v) for s, v in self.values.items()}
        for k, v in numerics.items():
            if v is not None:
                SCHEMA["numerics"][k].check and SCHEMA["numerics"][k].check(v)
                values.setdefault("numerics", {})[k] = v
        return Scenario(self.kind, values, self.source, self.base_dir, self.lines)


def _render(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def loads(text: str, source="<string>", base_dir=None) -> Scenario:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate key {exc.option!r} "
                          f"in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: expected a [section] header before "
                          f"{exc.line.strip()!r}") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"{source}:{lineno}: cannot parse {line.strip()!r}") from None
    lines = _line_index(text)
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}:{lines.get((section, None), '?')}: unknown section "
                              f"[{section}] (expected one of {', '.join(SCHEMA)})")
        values[section] = {}
        for key, raw in parser.items(section):
            anchor = f"{source}:{lines.get((section, key), lines.get((section, None), '?'))}"
            if key not in SCHEMA[section]:
                raise ConfigError(f"{anchor}: unknown key {key!r} in [{section}]")
            try:
                values[section][key] = _convert(SCHEMA[section][key], raw)
            except ValueError as exc:
                raise ConfigError(f"{anchor}: [{section}] {key} = {raw.strip()!r}: {exc}") from None
    if "scenario" not in values or "kind" not in values["scenario"]:
        raise ConfigError(f"{source}: missing [scenario] kind (one of {', '.join(KINDS)})")
    base = Path(base_dir) if base_dir is not None else (
        Path(source).resolve().parent if Path(source).exists() else Path.cwd())
    return Scenario(values["scenario"]["kind"], values, source, base, lines)


def load(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read scenario file: {exc.strerror}") from None
    return loads(text, str(path), path.resolve().parent)


# --------------------------------------------------------------------------
# building physics objects


def build_pump(sc: Scenario, phase=None):
    envelope = sc.get("pump", "envelope")
    if envelope == "none":
        return ZeroPump()
    lam = sc.get("pump", "wavelength_um")
    a0 = sc.get("pump", "a0")
    start, end = sc.get("pump", "support_start_um"), sc.get("pump", "support_end_um")
    if (start is None) != (end is None):
        key = "support_end_um" if start is not None else "support_start_um"
        raise sc.error("pump", key, "support needs both start and end")
    support = None if start is None else (start, end)
    if support is not None and end <= start:
        raise sc.error("pump", "support_end_um", "support must have positive length")
    phase = sc.get("pump", "phase") if phase is None else phase
    pol = sc.get("pump", "polarization")
    if envelope == "gaussian" and sc.get("pump", "sigma_um2") is None:
        raise sc.error("pump", "sigma_um2", "required for a gaussian envelope")
    if envelope == "bump" and sc.get("pump", "half_width_um") is None:
        raise sc.error("pump", "half_width_um", "required for a bump envelope")
    if envelope == "constant" and support is None:
        raise sc.error("pump", "envelope", "a constant envelope needs a finite support")
    if envelope == "samples-file":
        name = sc.get("pump", "samples_file")
        if not name:
            raise sc.error("pump", "samples_file", "required for envelope = samples-file")
        path = sc.resolve(name)
        try:
            table = read_csv(path)
            env = SampledEnvelope(table["xi_um"], a0 / lam * table["shape"])
        except (OSError, KeyError, ValueError) as exc:
            raise sc.error("pump", "samples_file", f"{path}: {exc}") from None
        a2 = {"linear": 0.0, "circular": -1.0}[pol]
        return ModulatedCarrier(env, 2 * np.pi / lam, a1=-1.0, a2=a2, phi=phase, support=support)
    return ModulatedCarrier.from_a0(a0, lam, envelope, sigma_um2=sc.get("pump", "sigma_um2"),
                                    center_um=sc.get("pump", "center_um"),
                                    half_width_um=sc.get("pump", "half_width_um"),
                                    polarization=pol, phase=phase, support=support)


def _kappa(sc: Scenario):
    volt = sc.get("field", "plate_potential_volt")
    dist = sc.get("field", "plate_distance_um")
    if (volt is None) != (dist is None):
        raise sc.error("field", "plate_distance_um" if volt is not None else "plate_potential_volt",
                       "plate potential and distance go together")
    if volt is not None:
        if sc.has("field", "kappa_per_um"):
            raise sc.error("field", "kappa_per_um", "give either kappa or the plate pair, not both")
        return kappa_from_plates(volt, dist)
    return sc.get("field", "kappa_per_um")


def build_field(sc: Scenario, pump=None) -> ConstantUniform:
    b = sc.get("field", "b_per_um")
    return ConstantUniform(e_perp=(sc.get("field", "e_x_per_um"), sc.get("field", "e_y_per_um")),
                           e_z=_kappa(sc),
                           b_perp=(sc.get("field", "b_x_per_um"), sc.get("field", "b_y_per_um")),
                           b_z=0.0 if b is None else b)


def build_density(sc: Scenario):
    n0 = sc.get("density", "n0_per_cm3")
    prof = sc.get("density", "profile_file")
    if (n0 is None) == (prof is None):
        raise sc.error("density", "n0_per_cm3", "give exactly one of n0_per_cm3 or profile_file")
    if n0 is not None:
        return StepDensity(n0)
    path = sc.resolve(prof)
    try:
        table = read_csv(path)
        return ProfileDensity(table["Z_um"], table["n_per_cm3"])
    except (OSError, KeyError, ValueError) as exc:
        raise sc.error("density", "profile_file", f"{path}: {exc}") from None


def _initial(sc: Scenario, xi0):
    g = lambda k: sc.get("initial", k)
    return XiState.from_lab(xi0 + g("z_um"), (g("x_um"), g("y_um"), g("z_um")),
                            (g("ux"), g("uy"), g("uz")))


def _xi_span(sc: Scenario, pump, tail=0.0):
    lo, hi = pump.extent if not isinstance(pump, ZeroPump) else (0.0, 1.0)
    xi0 = sc.get("numerics", "xi_min_um")
    xi1 = sc.get("numerics", "xi_max_um")
    xi0 = lo if xi0 is None else xi0
    xi1 = hi + tail if xi1 is None else xi1
    if not (np.isfinite(xi0) and np.isfinite(xi1)):
        raise sc.error("numerics", "xi_min_um", "pump has no finite extent; set xi_min_um/xi_max_um")
    if xi1 <= xi0:
        raise sc.error("numerics", "xi_max_um", "must exceed xi_min_um")
    return float(xi0), float(xi1)


def _xi_eval(sc: Scenario, span):
    h = sc.get("numerics", "xi_step_um")
    if h is None:
        return None
    grid = np.arange(span[0], span[1] + 0.5 * h, h)
    grid[-1] = min(grid[-1], span[1])
    return grid


# --------------------------------------------------------------------------
# validation


def validate(sc: Scenario) -> list:
    """Build every object the run needs without integrating; returns warnings."""
    notes = []
    pump = build_pump(sc)
    fld = build_field(sc)
    kind = sc.kind
    if kind in ("plasma-family", "plasma-step"):
        build_density(sc)
        if np.any(fld.e_vec):
            raise sc.error("field", "kappa_per_um", "plasma runs generate their own E; "
                           "only a static B is accepted")
        if not isinstance(pump, ZeroPump) and not np.isfinite(pump.extent[1]):
            raise sc.error("pump", "support_end_um", "plasma runs need a pump of compact support")
    if kind in ("vacuum-general", "vacuum-exact", "oracle-compare", "autoresonance"):
        span = _xi_span(sc, pump)
        if fld.e_z > 0 and span[1] - span[0] >= 1.0 / fld.e_z:
            notes.append(f"{sc.anchor('field', 'kappa_per_um')}: kappa > 0 reaches the s = 0 "
                         f"singularity at xi = {span[0] + 1 / fld.e_z:.6g} um before xi_max "
                         f"= {span[1]:.6g} um; the run will be truncated there")
    if kind == "vacuum-exact":
        if np.any([sc.get("initial", k) for k in SCHEMA["initial"]]):
            raise sc.error("initial", "x_um", "closed-form solutions start at rest at the origin")
        _exact_case(sc, fld)
    if kind == "oracle-compare" and np.any(fld.e_vec[:2]) and not sc.has("numerics", "xi_max_um"):
        notes.append(f"{sc.source}: transverse E accelerates without bound; set xi_max_um")
    if kind == "autoresonance":
        if not (isinstance(pump, ModulatedCarrier) and pump.a2 != 0
                and np.isclose(abs(pump.a1), abs(pump.a2))):
            raise sc.error("pump", "polarization", "autoresonance needs circular polarization")
        if np.any(fld.e_vec) or np.any(fld.b_vec[:2]):
            raise sc.error("field", "b_per_um", "autoresonance uses an axial B only")
    if kind == "kappa-scan":
        kmin, kmax = sc.get("numerics", "kappa_min_per_um"), sc.get("numerics", "kappa_max_per_um")
        if kmax <= kmin:
            raise sc.error("numerics", "kappa_max_per_um", "must exceed kappa_min_per_um")
        lo, hi = pump.extent
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise sc.error("pump", "envelope", "kappa scans need a pump of finite extent")
        if kmax > 0 and (hi - lo) * kmax >= 1 - S_COLLAPSE:
            raise sc.error("numerics", "kappa_max_per_um",
                           f"kappa = {kmax:g} reaches the s = 0 singularity before the pump ends")
    return notes


def _exact_case(sc: Scenario, fld: ConstantUniform):
    if np.any(fld.e_perp) or np.any(fld.b_perp):
        try:
            return GeneralBzEz.from_field(fld)
        except ValueError as exc:
            raise sc.error("field", "b_x_per_um", str(exc)) from None
    if fld.e_z and fld.b_z:
        return GeneralBzEz(fld.e_z, fld.b_z)
    if fld.b_z:
        return AxialB(fld.b_z)
    if fld.e_z:
        return AxialE(fld.e_z)
    return ZeroStatic()


# --------------------------------------------------------------------------
# runners


@dataclass
class RunResult:
    summary: dict
    files: dict
    warnings: list


def _traj_summary(traj):
    fin = traj.final()
    return {
        "status": traj.status,
        "xi_final_um": float(traj.xi[-1]),
        "z_final_um": float(fin.z),
        "u_perp_final": [float(c) for c in fin.u_perp],
        "gamma_final": float(traj.gamma[-1]),
        "gamma_max": float(np.max(traj.gamma)),
        "energy_gain_final": float(traj.energy_gain[-1]),
        "mass_shell_max": float(np.max(np.abs(traj.mass_shell_residual()))),
    }


def run_vacuum_general(sc, out, threads):
    pump = build_pump(sc)
    fld = build_field(sc)
    span = _xi_span(sc, pump)
    rtol, atol = sc.get("numerics", "rtol"), sc.get("numerics", "atol")
    traj = integrate_general(pump, fld, _initial(sc, span[0]), span, rtol, atol,
                             xi_eval=_xi_eval(sc, span))
    notes = []
    if traj.status != "completed":
        notes.append(traj.message)
    summary = _traj_summary(traj)
    summary["nfev"] = int(traj.nfev)
    return RunResult(summary, {"trajectory": write_csv(out / "trajectory.csv", traj.columns())},
                     notes)


def run_vacuum_exact(sc, out, threads):
    pump = build_pump(sc)
    fld = build_field(sc)
    span = _xi_span(sc, pump)
    case = _exact_case(sc, fld)
    notes = []
    if fld.e_z > 0 and 1 - fld.e_z * (span[1] - span[0]) < S_COLLAPSE:
        raise sc.error("numerics", "xi_max_um", "the closed form is singular inside the span")
    rtol, atol = sc.get("numerics", "rtol"), sc.get("numerics", "atol")
    num = integrate_general(pump, case_field(case), XiState.rest(span[0]), span, rtol, atol,
                            xi_eval=_xi_eval(sc, span))
    exact = solve_exact(case, pump, num.xi)
    dev = {}
    for name in ("x_perp", "z", "u_perp", "s"):
        a, b = np.asarray(getattr(num, name)), np.asarray(getattr(exact, name))
        scale = float(np.max(np.abs(b))) or 1.0
        dev[name] = float(np.max(np.abs(a - b)) / scale)
    summary = _traj_summary(exact)
    summary.update(case=type(case).__name__, max_rel_deviation=dev,
                   energy_gain_numerical=float(num.energy_gain[-1]))
    files = {"trajectory_exact": write_csv(out / "trajectory_exact.csv", exact.columns()),
             "trajectory": write_csv(out / "trajectory.csv", num.columns())}
    return RunResult(summary, files, notes)


def run_oracle(sc, out, threads):
    pump = build_pump(sc)
    fld = build_field(sc)
    span = _xi_span(sc, pump)
    rtol, atol = sc.get("numerics", "rtol"), sc.get("numerics", "atol")
    init = _initial(sc, span[0])
    traj = integrate_general(pump, fld, init, span, rtol, atol)
    g = lambda k: sc.get("initial", k)
    tinit = TState(span[0] + g("z_um"), np.array([g("x_um"), g("y_um"), g("z_um")]),
                   np.array([g("ux"), g("uy"), g("uz")]))
    ttraj = integrate_time(pump, fld, tinit, (tinit.ct, float(traj.ct[-1])), rtol, atol)
    rep = compare(traj, ttraj, sc.get("numerics", "compare_samples"))
    notes = [] if rep.agrees() else [f"xi- and t-domain solutions differ by {rep.worst:.3e}"]
    summary = {"max_rel": rep.max_rel, "rms_rel": rep.rms_rel, "agrees_1e-6": rep.agrees(),
               "xi_steps": int(len(traj.xi) - 1), "t_steps": int(ttraj.nsteps),
               "xi_nfev": int(traj.nfev), "t_nfev": int(ttraj.nfev), **_traj_summary(traj)}
    files = {"trajectory": write_csv(out / "trajectory.csv", traj.columns()),
             "time_trajectory": write_csv(out / "time_trajectory.csv", ttraj.columns())}
    return RunResult(summary, files, notes)


def run_kappa_scan(sc, out, threads):
    pump = build_pump(sc)
    scan = kappa_scan(pump, (sc.get("numerics", "kappa_min_per_um"),
                             sc.get("numerics", "kappa_max_per_um")),
                      sc.get("numerics", "kappa_points"), workers=threads)
    notes = []
    if not scan.interior_max:
        notes.append("maximum of E_f lies on the edge of the scanned range")
    if not scan.unimodal:
        notes.append("sampled E_f(kappa) is not unimodal")
    i0 = int(np.argmin(np.abs(scan.kappa)))
    positive = scan.energy_f[scan.kappa > 0]
    summary = {"kappa_M_per_um": scan.kappa_max, "E_f_max": float(scan.energy_f[scan.argmax]),
               "E_f_at_zero": float(scan.energy_f[i0]), "unimodal": scan.unimodal,
               "interior_max": scan.interior_max,
               "positive_kappa_below_zero_value": bool(np.all(positive < scan.energy_f[i0]))}
    return RunResult(summary, {"kappa_scan": write_csv(out / "kappa_scan.csv", scan.rows())},
                     notes)


def run_autoresonance(sc, out, threads):
    pump = build_pump(sc)
    b = sc.get("field", "b_per_um")
    b = -pump.k if b is None else b
    xi_eval = None
    if sc.has("numerics", "xi_max_um") or sc.has("numerics", "xi_step_um"):
        span = _xi_span(sc, pump, tail=0.25 * (pump.extent[1] - pump.extent[0]))
        xi_eval = _xi_eval(sc, span)
        if xi_eval is None:
            xi_eval = np.arange(span[0], span[1], pump.max_step / 2)
    diag = autoresonance_diag(pump, b, xi_grid=xi_eval)
    mismatch = abs(diag.ratio_post - diag.predicted_ratio) / diag.predicted_ratio
    summary = {"b_per_um": float(b), "detuning": float(-b / pump.k),
               "ratio_post": diag.ratio_post, "ratio_predicted": diag.predicted_ratio,
               "ratio_mismatch": float(mismatch), "energy_gain_final": diag.energy_final,
               "W_final": float(diag.W[-1])}
    notes = [] if mismatch < 0.2 or not np.isclose(-b, pump.k) else [
        f"post-pulse ratio differs from 2/(k W) by {mismatch:.1%}"]
    files = {"trajectory": write_csv(out / "trajectory.csv", diag.exact.columns()),
             "autoresonance": write_csv(out / "autoresonance.csv",
                                        {"xi_um": diag.xi, "W": diag.W, "ratio": diag.ratio})}
    return RunResult(summary, files, notes)


def _plasma_span(sc, pump, default_tail=200.0):
    lo, hi = pump.extent
    xi0 = sc.get("numerics", "xi_min_um")
    xi1 = sc.get("numerics", "xi_max_um")
    xi0 = min(lo, 0.0) if xi0 is None else xi0
    xi1 = hi + default_tail if xi1 is None else xi1
    if xi1 <= xi0:
        raise sc.error("numerics", "xi_max_um", "must exceed xi_min_um")
    return float(xi0), float(xi1)


def _period_fields(est, expected, notes):
    out = {"xi_H_um": est.xi_H, "xi_H_quadrature_um": est.quadrature, "cycles": est.cycles,
           "xi_H_quadrature_mismatch": est.mismatch}
    if expected is not None:
        rel = abs(est.xi_H - expected) / expected
        out["xi_H_expected_um"] = expected
        out["xi_H_expected_rel_error"] = rel
        if rel > 0.05:
            notes.append(f"measured xi_H = {est.xi_H:.4g} um differs from the expected "
                         f"{expected:g} um by {rel:.1%}")
    return out


def run_plasma_step(sc, out, threads):
    pump = build_pump(sc)
    density = build_density(sc)
    span = _plasma_span(sc, pump)
    rtol, atol = sc.get("numerics", "rtol"), sc.get("numerics", "atol")
    sol = solve_step_cauchy(pump, density.M, span, rtol, atol, xi_eval=_xi_eval(sc, span))
    notes = [] if sol.status == "completed" else [sol.message]
    summary = {"M_per_um2": density.M, "status": sol.status,
               "max_s": float(sol.s.max()), "max_gamma": float(sol.gamma.max()),
               "min_Delta_um": float(sol.Delta.min()),
               "mass_shell_max": float(np.max(np.abs(sol.mass_shell_residual())))}
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            est = period_estimate(sol)
            drift = invariant_drift(sol)
        notes += [str(w.message) for w in caught]
        summary.update(_period_fields(est, sc.get("numerics", "expected_xi_h_um"), notes))
        summary["C_drift_per_cycle_max"] = float(drift.max())
    except ValueError as exc:
        notes.append(f"no period measured: {exc}")
    if sc.get("numerics", "phase_check"):
        ds, du = carrier_phase_sensitivity(lambda ph: build_pump(sc, phase=sc.get("pump", "phase") + ph),
                                           density.M, span, rtol=rtol, atol=atol)
        summary.update(phase_shift_max_s_change=ds, phase_shift_max_u_perp_change=du)
    files = {"member": write_csv(out / "cauchy.csv", sol.columns())}
    return RunResult(summary, files, notes)


def run_plasma_family(sc, out, threads):
    pump = build_pump(sc)
    density = build_density(sc)
    fld = build_field(sc)
    b_s = tuple(fld.b_vec) if np.any(fld.b_vec) else None
    span = _plasma_span(sc, pump)
    rtol, atol = sc.get("numerics", "rtol"), sc.get("numerics", "atol")
    notes = []
    lo, hi = pump.extent
    z_max = sc.get("numerics", "z_max_um") or 3 * (hi - lo)
    n_z = sc.get("numerics", "z_points")
    Z_grid = np.concatenate([[0.0], np.geomspace(z_max * 1e-3, z_max, n_z - 1)])
    # the shared Cauchy problem fixes xi_H and hence the residual window
    ref = solve_step_cauchy(pump, density.M, span, rtol, atol) if density.__class__ is StepDensity \
        else None
    fam = solve_family(pump, density, Z_grid, span, rtol, atol, b_s=b_s,
                       xi_eval=_xi_eval(sc, span), workers=threads)
    if ref is None:
        ref = max((m for m in fam.members if m.valid), key=lambda m: m.Z, default=fam.members[-1])
    summary = {"M_per_um2": density.M, "members": len(fam.members),
               "valid_members": int(fam.valid.sum()),
               "min_valid_Z_um": float(min((m.Z for m in fam.members if m.valid), default=np.nan)),
               "max_gamma": float(fam.max_gamma.max()),
               "mass_shell_max": float(max(np.max(np.abs(m.mass_shell_residual()))
                                            for m in fam.members))}
    if fam.universal:
        summary["universality_deviation"] = fam.universality_deviation()
    xi_H = np.nan
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            est = period_estimate(ref)
        notes += [str(w.message) for w in caught]
        xi_H = est.xi_H
        summary.update(_period_fields(est, sc.get("numerics", "expected_xi_h_um"), notes))
    except ValueError as exc:
        notes.append(f"no period measured: {exc}")
    ct_max = sc.get("numerics", "ct_max_um")
    if ct_max is None and np.isfinite(xi_H):
        ct_max = 5 * xi_H
    files = {}
    if ct_max is not None:
        if ct_max > span[1]:
            raise sc.error("numerics", "xi_max_um",
                           f"residual window ct <= {ct_max:.6g} um needs xi_max_um >= that value")
        res = aperp_residual(fam, ct_max, sc.get("numerics", "residual_step_um"),
                             sc.get("numerics", "residual_threshold"))
        summary.update(residual_ratio=res.ratio, residual_threshold=res.threshold,
                       residual_passed=res.passed, residual_ct_max_um=ct_max)
        if not res.passed:
            notes.append(f"A_perp residual ratio {res.ratio:.3g} exceeds the threshold "
                         f"{res.threshold:g} for ct <= {ct_max:.4g} um")
        files["residual"] = write_csv(out / "residual.csv", res.rows())
    for i, m in enumerate(fam.members):
        files[f"member_{i:03d}"] = write_csv(out / "members" / f"member_{i:03d}.csv", m.columns())
    files["family_summary"] = write_csv(out / "family_summary.csv", fam.summary_rows(xi_H))
    return RunResult(summary, files, notes)


RUNNERS = {
    "vacuum-general": run_vacuum_general,
    "vacuum-exact": run_vacuum_exact,
    "oracle-compare": run_oracle,
    "kappa-scan": run_kappa_scan,
    "autoresonance": run_autoresonance,
    "plasma-step": run_plasma_step,
    "plasma-family": run_plasma_family,
}


def run(sc: Scenario, out_dir, threads=None) -> RunResult:
    """Validate, execute and write summary.json plus manifest.json into ``out_dir``."""
    out = Path(out_dir)
    notes = validate(sc)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = RUNNERS[sc.kind](sc, out, threads)
    except ConfigError:
        raise
    except (IntegrationFailure, SFactorCollapse, RuntimeError, FloatingPointError) as exc:
        raise NumericalFailure(f"{type(exc).__name__}: {exc}") from exc
    result.warnings[:0] = notes
    summary = {"kind": sc.kind, "name": sc.name, "warnings": result.warnings, **result.summary}
    files = {k: str(Path(v).relative_to(out)) for k, v in result.files.items()}
    summary_path = write_json(out / "summary.json", summary)
    manifest = {
        "tool": "lightfront", "version": __version__, "source": str(sc.source),
        "scenario": sc.to_dict(), "threads": threads,
        "outputs": {k: {"path": p, "sha256": sha256_file(out / p)} for k, p in files.items()},
        "summary_sha256": sha256_file(summary_path),
    }
    write_json(out / "manifest.json", manifest)
    result.summary = summary
    result.files = files
    return result


def from_manifest(path) -> tuple:
    import json

    path = Path(path)
    try:
        data = json.loads(path.read_text())
        return Scenario.from_dict(data["scenario"], source=str(path)), data.get("threads")
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: not a usable manifest: {exc}") from None


def bundled() -> list:
    return sorted(SCENARIO_DIR.glob("*.cfg"))
