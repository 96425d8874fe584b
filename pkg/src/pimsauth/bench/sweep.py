"""Latency sweeps over threshold, node count and message size for both schemes."""

from __future__ import annotations

import enum
import gc
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

from ..authz import AuthNetwork, DataOwner, LatencyModel, request_access
from ..crypto_core import generate_keypair
from ..errors import ConfigInvalid
from ..groups import DEFAULT_GROUP, GroupParams, make_rng
from ..ledger import Ledger, Scheme
from ..offchain_store import BlobStore
from ..secret_sharing import ThresholdPolicy
from ..timing import PhaseClock

log = logging.getLogger(__name__)

PHASES = ("encrypt_setup", "key_distribution", "node_response", "client_open", "end_to_end")
FAILED = "failed"
PEPPER = b"pimsauth-bench-pepper"


class Sweep(str, enum.Enum):
    THRESHOLD = "threshold"
    NODES = "nodes"
    MSGSIZE = "msgsize"


# fixed parameters and free-variable points for each sweep
DEFAULTS = {
    Sweep.THRESHOLD: dict(n=25, size=30),
    Sweep.NODES: dict(t=2, size=30 * 1024),
    Sweep.MSGSIZE: dict(n=25, t=2),
}
FREE_VARIABLE = {Sweep.THRESHOLD: "t", Sweep.NODES: "n", Sweep.MSGSIZE: "size"}
DEFAULT_NODE_POINTS = (5, 10, 15, 20, 25)
DEFAULT_SIZE_POINTS = (10, 100, 1_000, 10_000, 100_000, 1_000_000)


@dataclass(frozen=True)
class BenchRow:
    scheme: str
    t: int
    n: int
    msg_size_bytes: int
    phase: str
    latency_micros: int
    rep: int


@dataclass(frozen=True)
class SweepConfig:
    sweep: Sweep
    scheme: str = "both"
    t: int | None = None
    n: int | None = None
    size: int | None = None
    points: tuple[int, ...] | None = None
    repetitions: int = 30
    warmup: int = 5
    consumers: int = 1
    seed: int = 0
    latency: str = "none"
    timeout: float = 5.0
    out: str | None = None
    group: GroupParams = field(default=DEFAULT_GROUP, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "sweep", Sweep(self.sweep))
        if self.scheme not in ("ss", "pre", "both"):
            raise ConfigInvalid(f"scheme must be ss, pre or both, got {self.scheme!r}")
        if self.repetitions < 1 or self.warmup < 0 or self.consumers < 1:
            raise ConfigInvalid("need repetitions >= 1, warmup >= 0, consumers >= 1")
        free = FREE_VARIABLE[self.sweep]
        if getattr(self, free) is not None:
            raise ConfigInvalid(f"--{free} is the free variable of the {self.sweep.value} sweep")
        LatencyModel.parse(self.latency)
        for t, n, size in self.grid():
            if not 1 <= t <= n or size < 0:
                raise ConfigInvalid(f"invalid sweep point t={t} n={n} size={size}")

    @property
    def schemes(self) -> list[Scheme]:
        return [Scheme.SS, Scheme.PRE] if self.scheme == "both" else [Scheme(self.scheme.upper())]

    def _fixed(self, name: str) -> int:
        value = getattr(self, name)
        return DEFAULTS[self.sweep][name] if value is None else value

    def grid(self) -> list[tuple[int, int, int]]:
        """``(t, n, size)`` for every sweep point, in order."""
        if self.sweep is Sweep.THRESHOLD:
            n, size = self._fixed("n"), self._fixed("size")
            return [(t, n, size) for t in (self.points or range(1, n + 1))]
        if self.sweep is Sweep.NODES:
            t, size = self._fixed("t"), self._fixed("size")
            return [(t, n, size) for n in (self.points or DEFAULT_NODE_POINTS)]
        n, t = self._fixed("n"), self._fixed("t")
        return [(t, n, size) for size in (self.points or DEFAULT_SIZE_POINTS)]


@dataclass
class PointSetup:
    ledger: Ledger
    network: AuthNetwork
    store: BlobStore
    owner: DataOwner


def build_point(config: SweepConfig, scheme: Scheme, t: int, n: int, size: int, record: bool = False) -> PointSetup:
    seed = f"{config.seed}/{scheme.value}/{t}/{n}/{size}"
    ledger = Ledger()
    latency = LatencyModel.parse(config.latency)
    network = AuthNetwork.create(n, ledger, config.group, latency=latency, timeout=config.timeout,
                                 seed=seed + "/net", record=record)
    store = BlobStore()
    owner = DataOwner(network, store, PEPPER, group=config.group, rng=make_rng(seed + "/owner"))
    return PointSetup(ledger, network, store, owner)


def run_pipeline(setup: PointSetup, scheme: Scheme, policy: ThresholdPolicy, size: int,
                 consumers: int = 1) -> dict[str, int]:
    """One repetition: encrypt, register, distribute, grant, request. Returns microseconds per phase."""
    owner, rng = setup.owner, setup.owner.rng
    payload = rng.randbytes(size)
    parties = [generate_keypair(owner.group, rng=rng) for _ in range(consumers)]
    clock = PhaseClock()
    untimed = PhaseClock()
    start = time.perf_counter()

    with clock.phase("encrypt_setup"):
        sealed = owner.seal(payload)
    with untimed.phase("ledger"):
        record = owner.register(sealed, scheme, policy)
    if scheme is Scheme.SS:
        with clock.phase("key_distribution"):
            owner.distribute_shares(record)
    for consumer in parties:
        with untimed.phase("ledger"):
            owner.allow(record, consumer.public_key)
        if scheme is Scheme.PRE:
            with clock.phase("key_distribution"):
                owner.distribute_kfrags(record, consumer.public_key)
        plaintext = request_access(consumer, record.record_id, setup.network, store=setup.store,
                                   pepper=PEPPER, clock=clock, rng=rng)
        with untimed.phase("check"):
            if plaintext != payload:
                raise RuntimeError("recovered plaintext differs from the payload")

    wall = time.perf_counter() - start - untimed.total()
    out = {phase: clock.micros(phase) for phase in PHASES[:-1]}
    out["end_to_end"] = round(wall * 1e6)
    return out


def run_sweep(config: SweepConfig, progress: Callable[[str], None] | None = None) -> list[BenchRow]:
    rows: list[BenchRow] = []
    for scheme in config.schemes:
        if config.warmup:
            t, n, size = config.grid()[0]
            setup = build_point(config, scheme, t, n, size)
            for _ in range(config.warmup):
                run_pipeline(setup, scheme, ThresholdPolicy(t, n), size)
        for t, n, size in config.grid():
            if progress:
                progress(f"{scheme.value} t={t} n={n} size={size}")
            rows.extend(_run_point(config, scheme, t, n, size))
    return rows


def _timed_rep(setup: PointSetup, scheme: Scheme, policy: ThresholdPolicy, size: int, consumers: int):
    # like timeit: collect between repetitions, never inside one
    gc.collect()
    gc.disable()
    try:
        return run_pipeline(setup, scheme, policy, size, consumers)
    finally:
        gc.enable()


def _run_point(config: SweepConfig, scheme: Scheme, t: int, n: int, size: int) -> list[BenchRow]:
    rows = []
    try:
        setup = build_point(config, scheme, t, n, size)
        for rep in range(config.repetitions):
            timings = _timed_rep(setup, scheme, ThresholdPolicy(t, n), size, config.consumers)
            rows.extend(BenchRow(scheme.value, t, n, size, phase, timings[phase], rep) for phase in PHASES)
    except Exception:
        log.exception("sweep point %s t=%d n=%d size=%d failed", scheme.value, t, n, size)
        return [BenchRow(scheme.value, t, n, size, FAILED, 0, -1)]
    return rows


def failed_points(rows: list[BenchRow]) -> list[BenchRow]:
    return [r for r in rows if r.phase == FAILED]

