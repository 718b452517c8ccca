"""Problem instances: travel-time matrices, drone parameters and variant rules.

Node 0 is the depot, customers are 1..n.  All times are in one consistent
unit (minutes for the coordinate-based adapters).
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

ELAPSED = "elapsed"
FLIGHT_ONLY = "flight_only"
PRESETS = ("ponza", "murray", "tspd")


class InstanceError(ValueError):
    """Raised for malformed or inconsistent instance data."""


@dataclass(frozen=True)
class VariantConfig:
    """Rules that differ between the FSTSP formulations and the TSP-D."""

    endurance_mode: str = ELAPSED
    allow_launch_equals_return: bool = False
    setup_in_flight_time: bool = True
    alpha: float = 1.0

    def __post_init__(self):
        if self.endurance_mode not in (ELAPSED, FLIGHT_ONLY):
            raise InstanceError(f"unknown endurance_mode {self.endurance_mode!r}")
        if not self.alpha > 0:
            raise InstanceError("alpha must be positive")

    @classmethod
    def preset(cls, name: str, alpha: float = 1.0) -> VariantConfig:
        if name == "ponza":
            return cls(ELAPSED, False, True, alpha)
        if name == "murray":
            return cls(FLIGHT_ONLY, False, False, alpha)
        if name == "tspd":
            return cls(ELAPSED, True, True, alpha)
        raise InstanceError(f"unknown variant preset {name!r}")

    @property
    def preset_name(self) -> str | None:
        for name in PRESETS:
            if replace(self.preset(name), alpha=self.alpha) == self:
                return name
        return None

    def to_dict(self) -> dict:
        return {
            "endurance_mode": self.endurance_mode,
            "allow_launch_equals_return": self.allow_launch_equals_return,
            "setup_in_flight_time": self.setup_in_flight_time,
            "alpha": self.alpha,
        }


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    """An immutable FSTSP / TSP-D instance.

    ``tau`` and ``tau_d`` are (n+1)x(n+1) truck and drone travel times,
    ``e`` the drone endurance (``math.inf`` for unlimited), ``s_l`` and
    ``s_r`` the launch and recovery setup times.
    """

    n: int
    tau: np.ndarray
    tau_d: np.ndarray
    e: float
    s_l: float
    s_r: float
    eligible: frozenset[int]
    variant: VariantConfig = field(default_factory=VariantConfig)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tau", _readonly(self.tau))
        object.__setattr__(self, "tau_d", _readonly(self.tau_d))
        object.__setattr__(self, "eligible", frozenset(int(c) for c in self.eligible))
        object.__setattr__(self, "e", float(self.e))
        object.__setattr__(self, "s_l", float(self.s_l))
        object.__setattr__(self, "s_r", float(self.s_r))
        self.validate()

    def validate(self) -> None:
        if self.n < 1:
            raise InstanceError("an instance needs at least one customer")
        shape = (self.n + 1, self.n + 1)
        for label, m in (("tau", self.tau), ("tauD", self.tau_d)):
            if m.shape != shape:
                raise InstanceError(f"{label} has shape {m.shape}, expected {shape}")
            if not np.all(np.isfinite(m)) or np.any(m < 0):
                raise InstanceError(f"{label} must be finite and non-negative")
            if np.any(np.diag(m) != 0):
                raise InstanceError(f"{label} must have a zero diagonal")
        if not self.e > 0:
            raise InstanceError("endurance must be positive")
        if self.s_l < 0 or self.s_r < 0 or not (math.isfinite(self.s_l) and math.isfinite(self.s_r)):
            raise InstanceError("setup times must be finite and non-negative")
        bad = [c for c in self.eligible if not 1 <= c <= self.n]
        if bad:
            raise InstanceError(f"eligible customers out of range: {sorted(bad)}")

    @property
    def customers(self) -> range:
        return range(1, self.n + 1)

    def with_variant(self, preset: str) -> Instance:
        """Return a copy governed by the named preset.

        The TSP-D preset also drops the endurance limit and setup times.
        """
        variant = VariantConfig.preset(preset, self.variant.alpha)
        if preset == "tspd":
            return replace(self, variant=variant, e=math.inf, s_l=0.0, s_r=0.0)
        return replace(self, variant=variant)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "tau": self.tau.tolist(),
            "tauD": self.tau_d.tolist(),
            "e": "inf" if math.isinf(self.e) else self.e,
            "sL": self.s_l,
            "sR": self.s_r,
            "eligible": sorted(self.eligible),
            "variant": self.variant.to_dict(),
        }


def save_canonical(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(inst.to_dict(), indent=1))


def instance_from_dict(d: dict) -> Instance:
    try:
        e = d["e"]
        if isinstance(e, str):
            if e.strip().lower() not in ("inf", "infinity"):
                raise InstanceError(f"bad endurance value {e!r}")
            e = math.inf
        v = d.get("variant", {})
        variant = VariantConfig(
            endurance_mode=v.get("endurance_mode", ELAPSED),
            allow_launch_equals_return=bool(v.get("allow_launch_equals_return", False)),
            setup_in_flight_time=bool(v.get("setup_in_flight_time", True)),
            alpha=float(v.get("alpha", 1.0)),
        )
        return Instance(
            n=int(d["n"]),
            tau=d["tau"],
            tau_d=d["tauD"],
            e=float(e),
            s_l=float(d["sL"]),
            s_r=float(d["sR"]),
            eligible=frozenset(d["eligible"]),
            variant=variant,
            name=str(d.get("name", "")),
        )
    except KeyError as exc:
        raise InstanceError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(str(exc)) from None


def load_canonical(path) -> Instance:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: invalid JSON ({exc})") from None
    inst = instance_from_dict(d)
    if not inst.name:
        inst = replace(inst, name=Path(path).stem)
    return inst


def _distances(coords: np.ndarray, metric: str) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    if metric == "euclidean":
        return np.sqrt((diff**2).sum(axis=2))
    if metric == "manhattan":
        return np.abs(diff).sum(axis=2)
    raise InstanceError(f"unknown metric {metric!r}")


def build_matrices(
    coords,
    truck_metric: str = "manhattan",
    drone_metric: str = "euclidean",
    truck_speed: float = 40.0,
    drone_speed: float = 40.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Travel times in minutes from coordinates in km and speeds in km/h."""
    xy = np.asarray(coords, dtype=np.float64)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise InstanceError("coordinates must be an (n+1)x2 array")
    if truck_speed <= 0 or drone_speed <= 0:
        raise InstanceError("speeds must be positive")
    tau = _distances(xy, truck_metric) / truck_speed * 60.0
    tau_d = _distances(xy, drone_metric) / drone_speed * 60.0
    return tau, tau_d


_TSPLIB_KEY = re.compile(r"^\s*([A-Z_]+)\s*:\s*(.*?)\s*$")


def import_tsplib_fstsp(
    path,
    variant: str = "ponza",
    endurance: float = 40.0,
    s_l: float = 1.0,
    s_r: float = 1.0,
    truck_speed: float = 40.0,
    drone_speed: float = 40.0,
) -> Instance:
    """Read a TSPLIB ``EUC_2D`` file as a FSTSP instance.

    The first node of ``NODE_COORD_SECTION`` is the depot.  Truck times use
    the Manhattan metric and drone times the Euclidean one.  The optional
    headers ``ENDURANCE``, ``SETUP_LAUNCH``, ``SETUP_RETURN``, ``TRUCK_SPEED``
    and ``DRONE_SPEED`` override the keyword defaults, and an optional
    ``DRONE_ELIGIBLE_SECTION`` (node ids, ``-1`` terminated) restricts drone
    service; without it every customer is eligible.
    """
    headers: dict[str, str] = {}
    coords: list[tuple[float, float]] = []
    ids: list[int] = []
    eligible_ids: list[int] | None = None
    section = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if line.endswith("_SECTION"):
            section = line
            if section == "DRONE_ELIGIBLE_SECTION":
                eligible_ids = []
            continue
        m = _TSPLIB_KEY.match(line)
        if m and section is None:
            headers[m.group(1)] = m.group(2)
            continue
        parts = line.split()
        try:
            if section == "NODE_COORD_SECTION":
                if len(parts) != 3:
                    raise ValueError
                ids.append(int(parts[0]))
                coords.append((float(parts[1]), float(parts[2])))
            elif section == "DRONE_ELIGIBLE_SECTION":
                eligible_ids.extend(int(p) for p in parts if p != "-1")
            else:
                raise ValueError
        except ValueError:
            raise InstanceError(f"{path}:{lineno}: cannot parse {raw!r}") from None
    weight_type = headers.get("EDGE_WEIGHT_TYPE", "EUC_2D")
    if weight_type != "EUC_2D":
        raise InstanceError(f"{path}: unsupported EDGE_WEIGHT_TYPE {weight_type}")
    if "DIMENSION" in headers and int(headers["DIMENSION"]) != len(coords):
        raise InstanceError(f"{path}: DIMENSION {headers['DIMENSION']} but {len(coords)} nodes")
    if len(coords) < 2:
        raise InstanceError(f"{path}: need a depot and at least one customer")

    def num(key, default):
        try:
            return float(headers[key]) if key in headers else default
        except ValueError:
            raise InstanceError(f"{path}: bad value for {key}") from None

    tau, tau_d = build_matrices(
        coords, "manhattan", "euclidean", num("TRUCK_SPEED", truck_speed), num("DRONE_SPEED", drone_speed)
    )
    index = {node_id: k for k, node_id in enumerate(ids)}
    if eligible_ids is None:
        eligible = frozenset(range(1, len(coords)))
    else:
        try:
            eligible = frozenset(index[i] for i in eligible_ids)
        except KeyError as exc:
            raise InstanceError(f"{path}: eligible node {exc.args[0]} not in coordinates") from None
    inst = Instance(
        n=len(coords) - 1,
        tau=tau,
        tau_d=tau_d,
        e=num("ENDURANCE", endurance),
        s_l=num("SETUP_LAUNCH", s_l),
        s_r=num("SETUP_RETURN", s_r),
        eligible=eligible - {0},
        variant=VariantConfig.preset(variant),
        name=headers.get("NAME", Path(path).stem),
    )
    return inst


def import_agatz(path, alpha: float | None = None) -> Instance:
    """Read a TSP-D instance in the uniform/double-center text layout.

    The file holds ``/*...*/`` comment lines followed by the truck speed, the
    drone speed, the node count, the depot line and one ``x y name`` line per
    customer.  Both vehicles use Euclidean distance divided by their speed,
    and alpha defaults to the drone/truck speed ratio.
    """
    rows = [
        ln.strip()
        for ln in Path(path).read_text().splitlines()
        if ln.strip() and not ln.strip().startswith("/*")
    ]
    try:
        truck_speed = float(rows[0])
        drone_speed = float(rows[1])
        count = int(rows[2])
        pts = [tuple(float(v) for v in r.split()[:2]) for r in rows[3 : 3 + count]]
    except (IndexError, ValueError):
        raise InstanceError(f"{path}: unreadable TSP-D header or coordinates") from None
    if len(pts) != count or count < 2 or any(len(p) != 2 for p in pts):
        raise InstanceError(f"{path}: expected {count} coordinate lines")
    xy = np.array(pts)
    dist = _distances(xy, "euclidean")
    ratio = drone_speed / truck_speed if alpha is None else alpha
    return Instance(
        n=count - 1,
        tau=dist / truck_speed,
        tau_d=dist / drone_speed,
        e=math.inf,
        s_l=0.0,
        s_r=0.0,
        eligible=frozenset(range(1, count)),
        variant=VariantConfig.preset("tspd", ratio),
        name=Path(path).stem,
    )


def _read_matrix(path: Path) -> np.ndarray:
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(("%", "#")):
            continue
        try:
            rows.append([float(v) for v in re.split(r"[,\s]+", line) if v])
        except ValueError:
            raise InstanceError(f"{path}:{lineno}: non-numeric entry in {raw!r}") from None
    m = np.array(rows) if rows and len({len(r) for r in rows}) == 1 else None
    if m is None or m.shape[0] != m.shape[1]:
        raise InstanceError(f"{path}: expected a square matrix")
    return m


def import_murray_dir(
    path,
    endurance: float,
    s_l: float,
    s_r: float,
    capacity: float = 5.0,
    scale: float = 1.0,
) -> Instance:
    """Read a directory holding ``tau.csv``, ``tauprime.csv`` and ``nodes.csv``.

    The matrices are square, comma or blank separated, and may carry a copy of
    the depot as their last row and column, which is dropped after checking it
    matches node 0.  ``nodes.csv`` lists one node per line with the parcel
    weight as last column; a customer is drone eligible when its parcel weighs
    at most ``capacity``.  Times are multiplied by ``scale``.  Endurance and
    setup times are not stored in the files and must be given explicitly.
    """
    folder = Path(path)
    tau = _read_matrix(folder / "tau.csv") * scale
    tau_d = _read_matrix(folder / "tauprime.csv") * scale
    if tau.shape != tau_d.shape:
        raise InstanceError(f"{folder}: tau.csv and tauprime.csv differ in size")
    weights = []
    for lineno, raw in enumerate((folder / "nodes.csv").read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(("%", "#")):
            continue
        try:
            weights.append(float(re.split(r"[,\s]+", line)[-1]))
        except ValueError:
            raise InstanceError(f"{folder / 'nodes.csv'}:{lineno}: bad parcel weight in {raw!r}") from None
    size = tau.shape[0]
    if len(weights) in (size - 1, size) and size >= 3 and _is_depot_copy(tau, tau_d):
        tau, tau_d = tau[:-1, :-1], tau_d[:-1, :-1]
        weights = weights[: size - 1]
    if len(weights) != tau.shape[0]:
        raise InstanceError(f"{folder}: nodes.csv has {len(weights)} nodes, matrices have {tau.shape[0]}")
    n = tau.shape[0] - 1
    return Instance(
        n=n,
        tau=tau,
        tau_d=tau_d,
        e=endurance,
        s_l=s_l,
        s_r=s_r,
        eligible=frozenset(c for c in range(1, n + 1) if weights[c] <= capacity),
        variant=VariantConfig.preset("murray"),
        name=folder.name,
    )


def _is_depot_copy(tau: np.ndarray, tau_d: np.ndarray) -> bool:
    """Whether the last node duplicates the depot in both matrices."""
    last = tau.shape[0] - 1
    return all(
        np.allclose(m[last, :last], m[0, :last]) and np.allclose(m[:last, last], m[:last, 0])
        for m in (tau, tau_d)
    )


def random_instance(
    n: int,
    variant: str = "ponza",
    seed: int = 0,
    side: float = 10.0,
    eligible_fraction: float = 0.8,
    endurance: float = 20.0,
    setup: float = 1.0,
    alpha: float = 2.0,
) -> Instance:
    """A seeded synthetic instance on a ``side`` x ``side`` km square.

    FSTSP presets use a Manhattan truck at 30 km/h and a Euclidean drone at
    45 km/h.  The TSP-D preset uses Euclidean metrics for both, a drone
    ``alpha`` times faster than the truck, every customer eligible, and no
    endurance or setup times.
    """
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, side, size=(n + 1, 2))
    if variant == "tspd":
        tau, tau_d = build_matrices(coords, "euclidean", "euclidean", 30.0, 30.0 * alpha)
        return Instance(
            n, tau, tau_d, math.inf, 0.0, 0.0, frozenset(range(1, n + 1)),
            VariantConfig.preset("tspd", alpha), name=f"rand-tspd-{n}-{seed}",
        )
    tau, tau_d = build_matrices(coords, "manhattan", "euclidean", 30.0, 45.0)
    mask = rng.random(n) < eligible_fraction
    eligible = frozenset(int(c) for c in np.flatnonzero(mask) + 1)
    return Instance(
        n, tau, tau_d, endurance, setup, setup, eligible,
        VariantConfig.preset(variant), name=f"rand-{variant}-{n}-{seed}",
    )
