"""In-process transport, node network and its configuration file."""

from __future__ import annotations

import json
import os
import random
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Iterator

from ..crypto_core import KeyRole, generate_keypair
from ..errors import ConfigInvalid
from ..groups import DEFAULT_GROUP, GroupParams, make_rng
from ..ledger import Ledger
from .messages import AccessRequest, Ack, NodeResponse
from .node import AuthNode, Fault

DEFAULT_TIMEOUT = 5.0


@dataclass(frozen=True)
class LatencyModel:
    """One-way per-message delay in milliseconds.

    Accepted forms: ``none``, ``fixed:MS``, ``uniform:LO:HI``, ``exp:MEAN``.
    """

    kind: str = "none"
    a: float = 0.0
    b: float = 0.0

    @classmethod
    def parse(cls, text: str | None) -> LatencyModel:
        if not text or text == "none":
            return cls()
        kind, *args = text.split(":")
        try:
            vals = [float(x) for x in args]
        except ValueError:
            raise ConfigInvalid(f"bad latency model {text!r}") from None
        arity = {"fixed": 1, "uniform": 2, "exp": 1}
        if kind not in arity or len(vals) != arity[kind] or any(v < 0 for v in vals):
            raise ConfigInvalid(f"bad latency model {text!r}")
        if kind == "uniform" and vals[0] > vals[1]:
            raise ConfigInvalid("uniform latency needs LO <= HI")
        return cls(kind, *vals)

    @property
    def is_zero(self) -> bool:
        return self.kind == "none" or (self.kind in ("fixed", "exp") and self.a == 0)

    def sample(self, rng: random.Random) -> float:
        """Delay in seconds."""
        if self.kind == "fixed":
            ms = self.a
        elif self.kind == "uniform":
            ms = rng.uniform(self.a, self.b)
        elif self.kind == "exp":
            ms = rng.expovariate(1.0 / self.a) if self.a else 0.0
        else:
            ms = 0.0
        return ms / 1000.0

    def __str__(self) -> str:
        if self.kind == "none":
            return "none"
        if self.kind == "uniform":
            return f"uniform:{self.a:g}:{self.b:g}"
        return f"{self.kind}:{self.a:g}"


@dataclass(frozen=True)
class NetworkConfig:
    n: int
    t: int
    latency: LatencyModel = field(default_factory=LatencyModel)
    timeout: float = DEFAULT_TIMEOUT
    links: dict = field(default_factory=dict)  # node_id -> LatencyModel override

    def __post_init__(self):
        if not 1 <= self.t <= self.n:
            raise ConfigInvalid(f"need 1 <= t <= n, got t={self.t}, n={self.n}")
        if self.timeout <= 0:
            raise ConfigInvalid("timeout must be positive")
        if any(not 0 <= int(k) < self.n for k in self.links):
            raise ConfigInvalid("link override for a node outside 0..n-1")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "t": self.t,
            "latency": str(self.latency),
            "timeout": self.timeout,
            "links": {str(k): str(v) for k, v in sorted(self.links.items())},
        }

    @classmethod
    def from_dict(cls, obj: dict) -> NetworkConfig:
        try:
            return cls(
                n=int(obj["n"]),
                t=int(obj["t"]),
                latency=LatencyModel.parse(obj.get("latency", "none")),
                timeout=float(obj.get("timeout", DEFAULT_TIMEOUT)),
                links={int(k): LatencyModel.parse(v) for k, v in obj.get("links", {}).items()},
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"bad network config: {exc}") from exc

    @classmethod
    def load(cls, path: str | os.PathLike) -> NetworkConfig:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


class InProcessTransport:
    """Delivers frames to nodes in this process.

    With zero latency on every link the fan-out is a lazy, sequential walk in
    node order, so a fixed seed gives an identical transcript every run. Any
    non-zero latency switches to a thread per node with responses yielded in
    arrival order.
    """

    def __init__(self, latency: LatencyModel | None = None, links: dict | None = None, seed=None, record: bool = False):
        self.latency = latency or LatencyModel()
        self.links = dict(links or {})
        self._rng = make_rng(seed)
        self._rng_lock = threading.Lock()
        self.record = record
        self.transcript: list[tuple[int, bytes, bytes]] = []

    def _model(self, node_id: int) -> LatencyModel:
        return self.links.get(node_id, self.latency)

    @property
    def is_zero(self) -> bool:
        return self.latency.is_zero and all(m.is_zero for m in self.links.values())

    def _delay(self, node_id: int) -> None:
        model = self._model(node_id)
        if model.is_zero:
            return
        with self._rng_lock:
            d = model.sample(self._rng)
        time.sleep(d)

    def call(self, node: AuthNode, frame: bytes) -> bytes | None:
        if node.fault is Fault.OFFLINE:
            return None
        self._delay(node.node_id)
        reply = node.handle_frame(frame)
        self._delay(node.node_id)
        if self.record:
            self.transcript.append((node.node_id, frame, reply))
        return reply

    def fan_out(self, nodes: list[AuthNode], frame: bytes, timeout: float) -> Iterator[tuple[int, bytes]]:
        if self.is_zero:
            for node in nodes:
                reply = self.call(node, frame)
                if reply is not None:
                    yield node.node_id, reply
            return
        deadline = time.monotonic() + timeout
        pool = ThreadPoolExecutor(max_workers=max(1, len(nodes)))
        try:
            pending = {pool.submit(self.call, node, frame): node.node_id for node in nodes}
            while pending:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return
                done, _ = wait(pending, timeout=remaining, return_when=FIRST_COMPLETED)
                for fut in done:
                    node_id = pending.pop(fut)
                    reply = fut.result()
                    if reply is not None:
                        yield node_id, reply
        finally:
            pool.shutdown(wait=False, cancel_futures=True)


class AuthNetwork:
    def __init__(self, nodes: list[AuthNode], ledger: Ledger, transport: InProcessTransport | None = None,
                 timeout: float = DEFAULT_TIMEOUT):
        self.nodes = list(nodes)
        self.ledger = ledger
        self.transport = transport or InProcessTransport()
        self.timeout = timeout

    @classmethod
    def create(cls, n: int, ledger: Ledger, group: GroupParams = DEFAULT_GROUP, *,
               latency: LatencyModel | None = None, links: dict | None = None,
               timeout: float = DEFAULT_TIMEOUT, seed=None, record: bool = False) -> AuthNetwork:
        rng = make_rng(seed)
        nodes = [
            AuthNode(i, generate_keypair(group, role=KeyRole.NODE_IDENTITY, rng=rng), ledger,
                     rng=make_rng(rng.randbytes(16)) if seed is not None else None)
            for i in range(n)
        ]
        transport = InProcessTransport(latency, links, seed=rng.randbytes(16), record=record)
        return cls(nodes, ledger, transport, timeout)

    @classmethod
    def from_config(cls, config: NetworkConfig, ledger: Ledger, group: GroupParams = DEFAULT_GROUP, *,
                    seed=None, record: bool = False) -> AuthNetwork:
        return cls.create(config.n, ledger, group, latency=config.latency, links=config.links,
                          timeout=config.timeout, seed=seed, record=record)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def node(self, node_id: int) -> AuthNode:
        return self.nodes[node_id]

    def set_fault(self, node_id: int, fault: Fault) -> None:
        self.nodes[node_id].fault = fault

    def deliver_provision(self, messages) -> list[Ack]:
        acks = []
        for msg in messages:
            reply = self.transport.call(self.nodes[msg.node_id], msg.to_frame())
            acks.append(Ack.from_frame(reply) if reply is not None else Ack(msg.node_id, msg.record_id, False, "Offline"))
        return acks

    def fan_out(self, request: AccessRequest, timeout: float | None = None) -> Iterator[NodeResponse]:
        frame = request.to_frame()
        for _, reply in self.transport.fan_out(self.nodes, frame, timeout or self.timeout):
            yield NodeResponse.from_frame(reply)
