"""Physical-layer topology: the twin-ready description of the network.

Assembled after probing/characterization and consumed by the working-point
optimizer and the lightpath computation engine.  ROADMs are modeled as flat
configurable losses; amplifier devices carry their limits and noise figure.
"""

import enum
from dataclasses import dataclass, field, replace

from .edfa import EdfaMode, EdfaOperatingPoint
from .errors import TopologyError
from .fiber import FiberSpanParams
from .grid import ChannelPlan
from .line import OlsDescriptor


class OlsState(enum.Enum):
    NOT_READY = "NOT_READY"
    READY = "READY"
    FAILED = "FAILED"


@dataclass(frozen=True)
class RoadmSpec:
    node_id: str
    add_loss_db: float = 9.0
    drop_loss_db: float = 9.0
    express_loss_db: float = 11.0


@dataclass(frozen=True)
class TrxSpec:
    trx_id: str
    node_id: str
    frequency_hz: float
    trx_type: str  # "ACO" | "DCO"


@dataclass(frozen=True)
class AmpDevice:
    """Datasheet description of one amplifier slot."""

    label: str              # "BST", "ILA 1", ..., "PRE"
    nf_db: float = 5.0
    g_min_db: float = 1.0
    g_max_db: float = 30.0
    p_out_max_dbm: float = 23.5
    target_p_out_dbm: float = 20.0   # design target for power-mode amps

    def operating_point(self, mode: EdfaMode, gain_db=0.0, tilt_db=0.0,
                        p_out_dbm=None) -> EdfaOperatingPoint:
        return EdfaOperatingPoint(
            mode=mode, gain_db=gain_db, tilt_db=tilt_db,
            p_out_dbm=self.target_p_out_dbm if p_out_dbm is None else p_out_dbm,
            nf_db=self.nf_db, g_min_db=self.g_min_db, g_max_db=self.g_max_db,
            p_out_max_dbm=self.p_out_max_dbm)


@dataclass
class OlsPhy:
    """One characterized OLS: spans, amplifier devices, working points."""

    ols_id: str
    endpoint_a: str
    endpoint_b: str
    spans: tuple                     # FiberSpanParams, fitted
    amps: tuple                      # AmpDevice, len = len(spans) + 1
    operating_points: tuple | None = None
    state: OlsState = OlsState.NOT_READY

    def __post_init__(self):
        self.spans = tuple(self.spans)
        self.amps = tuple(self.amps)
        if len(self.amps) != len(self.spans) + 1:
            raise TopologyError(
                f"OLS {self.ols_id}: {len(self.spans)} spans need "
                f"{len(self.spans) + 1} amplifier slots, got {len(self.amps)}")

    def span_ids(self) -> tuple:
        return tuple(f"{self.ols_id}/{i + 1}" for i in range(len(self.spans)))

    def descriptor(self) -> OlsDescriptor:
        if self.operating_points is None:
            raise TopologyError(f"OLS {self.ols_id} has no working point yet")
        ops = self.operating_points
        return OlsDescriptor(self.ols_id, booster=ops[0], spans=self.spans,
                             ilas=ops[1:-1], preamp=ops[-1],
                             endpoint_a=self.endpoint_a,
                             endpoint_b=self.endpoint_b)

    def with_operating_points(self, ops) -> "OlsPhy":
        ops = tuple(ops)
        if len(ops) != len(self.amps):
            raise TopologyError(
                f"OLS {self.ols_id}: expected {len(self.amps)} operating "
                f"points, got {len(ops)}")
        return replace(self, operating_points=ops, state=OlsState.READY)


@dataclass
class PhyTopology:
    """Complete twin-ready picture of the optical network."""

    plan: ChannelPlan
    roadms: dict = field(default_factory=dict)    # node_id -> RoadmSpec
    olss: dict = field(default_factory=dict)      # ols_id -> OlsPhy
    trxs: tuple = ()                              # TrxSpec
    curves: dict = field(default_factory=dict)    # trx_type -> TrxB2BCurve

    def neighbors(self, node_id: str):
        for ols in self.olss.values():
            if ols.endpoint_a == node_id:
                yield ols.endpoint_b, ols.ols_id
            elif ols.endpoint_b == node_id:
                yield ols.endpoint_a, ols.ols_id

    def trxs_at(self, node_id: str) -> tuple:
        return tuple(t for t in self.trxs if t.node_id == node_id)

    def validate(self):
        for ols in self.olss.values():
            for end in (ols.endpoint_a, ols.endpoint_b):
                if end not in self.roadms:
                    raise TopologyError(
                        f"OLS {ols.ols_id} endpoint {end!r} has no ROADM")
        for trx in self.trxs:
            if trx.node_id not in self.roadms:
                raise TopologyError(
                    f"TRX {trx.trx_id} references unknown node {trx.node_id!r}")
            self.plan.index_of(trx.frequency_hz)
        return self
