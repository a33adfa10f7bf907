"""Scenario files: INI-style experiment configuration with validation.

A scenario pins everything about an experiment except the run seed and
the swept total cache size: deployment geometry, the video catalog, the
workload mix, link capacities, period lengths and policy constants.
Unknown sections and keys are rejected so a typo fails loudly instead of
silently running with a default.  Every reported problem is prefixed
with the ``section.key`` it belongs to.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from .catalog import CatalogConfig, CatalogConfigError
from .coop import CLOUD
from .workload import WorkloadConfig

_SECTIONS = ("topology", "catalog", "workload", "cache", "coop",
             "periods", "policy", "seeds")

DEFAULT_MEC_POSITIONS = ((-600.0, 0.0), (0.0, 0.0), (600.0, 0.0))
DEFAULT_ENODEB_POSITIONS = ((-600.0, 342.0), (-600.0, -342.0),
                            (0.0, 690.0), (0.0, -690.0),
                            (600.0, 342.0), (600.0, -342.0))


class ScenarioError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass(frozen=True)
class TopologyConfig:
    mec_positions: tuple[tuple[float, float], ...]
    enodeb_positions: tuple[tuple[float, float], ...]
    n_clients: int
    area: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    bandwidth_hz: float
    tx_power_dbm: float
    noise_dbm: float
    pathloss_anchor_db: float
    pathloss_exponent: float
    shadow_sigma_db: float

    @property
    def n_mecs(self) -> int:
        return len(self.mec_positions)


@dataclass(frozen=True)
class CacheConfig:
    total_size: int
    mec_sizes: tuple[int, ...] | None = None  # explicit per-MEC override


@dataclass(frozen=True)
class CoopConfig:
    cloud_rate_bps: float
    intermec_rate_bps: float
    cp_matrix: tuple[tuple[float, ...], ...] | None = None

    def link_rates(self, q: int, n_mecs: int) -> dict[int, float]:
        """Per-link capacities for MEC q; a zero entry means no link."""
        if self.cp_matrix is not None:
            row = self.cp_matrix[q]
            rates = {p: row[p] for p in range(n_mecs)
                     if p != q and row[p] > 0}
            rates[CLOUD] = row[n_mecs]
            return rates
        rates = {p: self.intermec_rate_bps for p in range(n_mecs) if p != q}
        rates[CLOUD] = self.cloud_rate_bps
        return rates


@dataclass(frozen=True)
class PeriodConfig:
    td_s: float
    gammas_per_j: int
    n_j: int
    slice_s: float

    @property
    def n_periods(self) -> int:
        return self.gammas_per_j * self.n_j


@dataclass(frozen=True)
class PolicyParams:
    alpha: float = 0.5
    beta: float = 0.6  # parsed and carried for compatibility, consumed nowhere
    zeta: float = 0.8
    lam: float = 0.8
    omega: float = 2.0
    wgdsf_w_time: float = 1.0
    wgdsf_w_doc: float = 1.0
    wgdsf_half_life: float = 5.0
    rbcc_discount: float = 0.5
    max_candidates: int = 64
    max_buffer_s: float = 30.0


@dataclass
class Scenario:
    topology: TopologyConfig
    catalog: CatalogConfig
    workload: WorkloadConfig
    history_sessions: int
    cache: CacheConfig
    coop: CoopConfig
    periods: PeriodConfig
    policy: PolicyParams
    seeds: tuple[int, ...]

    def with_total_size(self, total: int) -> "Scenario":
        """Copy with a new total cache size (sweep support).

        An explicit per-MEC split is rescaled proportionally, with the
        last MEC absorbing the rounding remainder.
        """
        if total < 1:
            raise ValueError("total cache size must be >= 1")
        if self.cache.mec_sizes is None:
            return replace(self, cache=CacheConfig(int(total), None))
        factor = total / sum(self.cache.mec_sizes)
        sizes = [int(round(s * factor)) for s in self.cache.mec_sizes[:-1]]
        sizes.append(int(total) - sum(sizes))
        if any(s < 1 for s in sizes):
            raise ValueError("total cache size too small for per-MEC split")
        return replace(self, cache=CacheConfig(int(total), tuple(sizes)))


class _Section:
    """Typed key extraction from one raw section, collecting problems."""

    def __init__(self, name: str, raw: dict[str, str], errors: list[str]):
        self.name = name
        self.raw = dict(raw)
        self.errors = errors

    def error(self, key: str, message: str) -> None:
        self.errors.append(f"{self.name}.{key}: {message}")

    def _text(self, key: str) -> str | None:
        value = self.raw.pop(key, None)
        if value is None:
            return None
        value = value.strip()
        if not value:
            self.error(key, "empty value")
            return None
        return value

    def number(self, key: str, default, low=None, high=None,
               strict_low=False):
        text = self._text(key)
        if text is None:
            return default
        try:
            value = float(text)
        except ValueError:
            self.error(key, f"not a number: {text!r}")
            return default
        if low is not None and (value <= low if strict_low else value < low):
            self.error(key, f"must be {'>' if strict_low else '>='} {low:g}")
            return default
        if high is not None and value > high:
            self.error(key, f"must be <= {high:g}")
            return default
        return value

    def integer(self, key: str, default, low=None):
        text = self._text(key)
        if text is None:
            return default
        try:
            value = float(text)
        except ValueError:
            self.error(key, f"not a number: {text!r}")
            return default
        if value != int(value):
            self.error(key, f"not an integer: {text!r}")
            return default
        value = int(value)
        if low is not None and value < low:
            self.error(key, f"must be >= {low}")
            return default
        return value

    def floats(self, key: str, default, count: int | None = None):
        text = self._text(key)
        if text is None:
            return default
        try:
            values = tuple(float(part) for part in text.split(","))
        except ValueError:
            self.error(key, f"not a comma-separated number list: {text!r}")
            return default
        if count is not None and len(values) != count:
            self.error(key, f"expected {count} values, got {len(values)}")
            return default
        return values

    def integers(self, key: str, default):
        values = self.floats(key, None)
        if values is None:
            return default
        if any(v != int(v) for v in values):
            self.error(key, "entries must be integers")
            return default
        return tuple(int(v) for v in values)

    def positions(self, key: str, default):
        text = self._text(key)
        if text is None:
            return default
        points = []
        for part in text.split(";"):
            coords = part.split(",")
            try:
                if len(coords) != 2:
                    raise ValueError
                points.append((float(coords[0]), float(coords[1])))
            except ValueError:
                self.error(key, f"bad x,y pair: {part.strip()!r}")
                return default
        if not points:
            self.error(key, "empty")
            return default
        return tuple(points)

    def matrix(self, key: str):
        text = self._text(key)
        if text is None:
            return None
        rows = []
        for part in text.split(";"):
            try:
                rows.append(tuple(float(x) for x in part.split(",")))
            except ValueError:
                self.error(key, f"bad matrix row: {part.strip()!r}")
                return None
        return tuple(rows)

    def done(self) -> None:
        for key in self.raw:
            self.error(key, "unknown key")


def scenario_from_text(text: str, source: str = "<scenario>") -> Scenario:
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#",),
                                       empty_lines_in_values=False)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioError([f"parse: {exc}"]) from exc

    errors: list[str] = []
    for name in parser.sections():
        if name not in _SECTIONS:
            errors.append(f"{name}: unknown section")

    def section(name: str) -> _Section:
        raw = dict(parser[name]) if parser.has_section(name) else {}
        return _Section(name, raw, errors)

    topo = section("topology")
    mec_positions = topo.positions("mec_positions", DEFAULT_MEC_POSITIONS)
    enodeb_positions = topo.positions("enodeb_positions",
                                      DEFAULT_ENODEB_POSITIONS)
    n_clients = topo.integer("n_clients", 378, low=1)
    area = topo.floats("area", (-900.0, -690.0, 900.0, 690.0), count=4)
    bandwidth = topo.number("bandwidth_hz", 20e6, low=0, strict_low=True)
    tx_power = topo.number("tx_power_dbm", 40.0)
    noise = topo.number("noise_dbm", -94.0)
    anchor = topo.number("pathloss_anchor_db", 20.0, low=0)
    exponent = topo.number("pathloss_exponent", 3.5, low=0, strict_low=True)
    shadow = topo.number("shadow_sigma_db", 4.0, low=0)
    topo.done()
    if not (area[0] < area[2] and area[1] < area[3]):
        topo.error("area", "needs xmin < xmax and ymin < ymax")

    cat = section("catalog")
    catalog_config = CatalogConfig(
        n_videos=cat.integer("n_videos", 200, low=1),
        segments_min=cat.integer("segments_min", 30, low=1),
        segments_max=cat.integer("segments_max", 120, low=1),
        rates_bps=cat.floats("rates_bps",
                             (350e3, 600e3, 1e6, 2e6, 4e6)),
        segment_duration_s=cat.number("segment_duration_s", 2.0,
                                      low=0, strict_low=True),
        fps=cat.number("fps", 30.0, low=0, strict_low=True),
        size_jitter=cat.number("size_jitter", 0.1, low=0),
        popular_fraction=cat.number("popular_fraction", 0.2,
                                    low=0, strict_low=True, high=1.0),
        zipf_theta=cat.number("zipf_theta", 0.8, low=0, strict_low=True),
        seed=cat.integer("seed", 0),
    )
    cat.done()
    try:
        catalog_config.validate()
    except CatalogConfigError as exc:
        errors.append(f"catalog: {exc}")

    work = section("workload")
    workload_config = WorkloadConfig(
        zipf_theta=work.number("zipf_theta", 0.8, low=0, strict_low=True),
        level_weights=work.floats("level_weights", None),
        abandon_prob=work.number("abandon_prob", 0.5, low=0, high=1.0),
    )
    history_sessions = work.integer("history_sessions", 40, low=1)
    work.done()
    try:
        workload_config.validate(len(catalog_config.rates_bps))
    except ValueError as exc:
        errors.append(f"workload: {exc}")

    cache_sec = section("cache")
    total_size = cache_sec.integer("total_size", None, low=1)
    mec_sizes = cache_sec.integers("mec_sizes", None)
    cache_sec.done()
    if mec_sizes is not None:
        if len(mec_sizes) != len(mec_positions):
            cache_sec.error("mec_sizes",
                            f"expected {len(mec_positions)} entries")
        elif any(s < 1 for s in mec_sizes):
            cache_sec.error("mec_sizes", "entries must be >= 1")
        elif total_size is None:
            total_size = sum(mec_sizes)
        elif total_size != sum(mec_sizes):
            cache_sec.error("total_size",
                            f"must equal sum of mec_sizes "
                            f"({sum(mec_sizes)})")
    elif total_size is None:
        cache_sec.error("total_size", "missing")

    coop_sec = section("coop")
    coop_config = CoopConfig(
        cloud_rate_bps=coop_sec.number("cloud_rate_bps", 500e6,
                                       low=0, strict_low=True),
        intermec_rate_bps=coop_sec.number("intermec_rate_bps", 200e6,
                                          low=0, strict_low=True),
        cp_matrix=coop_sec.matrix("cp_matrix"),
    )
    coop_sec.done()
    if coop_config.cp_matrix is not None:
        q_count = len(mec_positions)
        m = coop_config.cp_matrix
        if len(m) != q_count or any(len(row) != q_count + 1 for row in m):
            coop_sec.error("cp_matrix",
                           f"expected {q_count} rows of {q_count + 1} "
                           f"rates (last one the cloud link)")
        else:
            if any(m[q][q] != 0 for q in range(q_count)):
                coop_sec.error("cp_matrix", "diagonal must be 0")
            if any(rate < 0 for row in m for rate in row):
                coop_sec.error("cp_matrix", "rates must be >= 0")
            if any(row[q_count] <= 0 for row in m):
                coop_sec.error("cp_matrix", "cloud column must be positive")

    per = section("periods")
    period_config = PeriodConfig(
        td_s=per.number("td_s", 100.0, low=0, strict_low=True),
        gammas_per_j=per.integer("gammas_per_j", 10, low=1),
        n_j=per.integer("n_j", 10, low=1),
        slice_s=per.number("slice_s", 0.5, low=0, strict_low=True),
    )
    per.done()
    if period_config.slice_s > period_config.td_s:
        per.error("slice_s", "must be <= td_s")

    pol = section("policy")
    policy_params = PolicyParams(
        alpha=pol.number("alpha", 0.5, low=0, strict_low=True),
        beta=pol.number("beta", 0.6),
        zeta=pol.number("zeta", 0.8, low=0),
        lam=pol.number("lambda", 0.8, low=0, strict_low=True, high=1.0),
        omega=pol.number("omega", 2.0, low=0, strict_low=True),
        wgdsf_w_time=pol.number("wgdsf_w_time", 1.0, low=0,
                                strict_low=True),
        wgdsf_w_doc=pol.number("wgdsf_w_doc", 1.0, low=0, strict_low=True),
        wgdsf_half_life=pol.number("wgdsf_half_life", 5.0),
        rbcc_discount=pol.number("rbcc_discount", 0.5, low=0, high=1.0),
        max_candidates=pol.integer("max_candidates", 64, low=1),
        max_buffer_s=pol.number("max_buffer_s", 30.0, low=0,
                                strict_low=True),
    )
    pol.done()

    seeds_sec = section("seeds")
    seeds = seeds_sec.integers("seeds", ())
    seeds_sec.done()
    if not seeds:
        errors.append("seeds: empty")
    elif len(set(seeds)) != len(seeds):
        seeds_sec.error("seeds", "duplicate entries")

    if errors:
        raise ScenarioError(errors)

    topology = TopologyConfig(mec_positions, enodeb_positions, n_clients,
                              area, bandwidth, tx_power, noise, anchor,
                              exponent, shadow)
    return Scenario(topology, catalog_config, workload_config,
                    history_sessions, CacheConfig(total_size, mec_sizes),
                    coop_config, period_config, policy_params,
                    tuple(seeds))


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError([f"file: {exc}"]) from exc
    return scenario_from_text(text, source=str(path))


def validate_scenario(path: str | Path) -> list[str]:
    """Errors found in the file; empty means it loaded cleanly."""
    try:
        load_scenario(path)
    except ScenarioError as exc:
        return exc.errors
    return []
