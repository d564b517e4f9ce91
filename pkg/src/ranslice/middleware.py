"""I/O middleware between MNOs and the infrastructure provider.

Database view (DVI), request submission into per-class FIFO buffers,
ordered request collection and the admit/reject messaging broker.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidRequest


@dataclass(frozen=True)
class DviRecord:
    bs_id: int
    location: tuple[float, float]
    price_per_rb: float
    num_rbs: int
    rbs_currently_allocated: int
    congestion: float


@dataclass(frozen=True)
class DviSnapshot:
    records: tuple[DviRecord, ...]

    def __len__(self):
        return len(self.records)

    def record(self, bs_id):
        for r in self.records:
            if r.bs_id == bs_id:
                return r
        raise KeyError(bs_id)

    def loads(self):
        """Currently allocated RBs per BS, recovered from the congestion field."""
        return {r.bs_id: int(round(r.congestion * r.num_rbs)) for r in self.records}


def snapshot_dvi(topology, current_grid=None):
    """Public per-BS view. Only aggregate allocation counts, never MNO identities."""
    allocated = current_grid.allocated_counts() if current_grid is not None else {}
    records = []
    for s in topology:
        used = int(allocated.get(s.bs_id, 0))
        records.append(
            DviRecord(
                bs_id=s.bs_id,
                location=s.location,
                price_per_rb=s.price_per_rb,
                num_rbs=s.num_rbs,
                rbs_currently_allocated=used,
                congestion=used / s.num_rbs,
            )
        )
    return DviSnapshot(tuple(records))


@dataclass(frozen=True)
class SliceRequest:
    mno_id: int
    class_id: int
    timestamp: int
    demanded: dict
    max_price: float

    def validate(self):
        if not self.demanded:
            raise InvalidRequest(f"MNO {self.mno_id}: empty demanded map")
        counts = list(self.demanded.values())
        if any(int(c) != c or c < 0 for c in counts):
            raise InvalidRequest(f"MNO {self.mno_id}: RB counts must be non-negative integers")
        if not any(c > 0 for c in counts):
            raise InvalidRequest(f"MNO {self.mno_id}: all demanded counts are zero")
        if not (self.max_price >= 0) or math.isnan(self.max_price):
            raise InvalidRequest(f"MNO {self.mno_id}: max_price must be >= 0")
        return self

    @property
    def total_demand(self):
        return sum(self.demanded.values())

    def to_dict(self):
        return {
            "mno_id": self.mno_id,
            "class_id": self.class_id,
            "timestamp": self.timestamp,
            "demanded": {str(b): int(c) for b, c in sorted(self.demanded.items())},
            "max_price": self.max_price,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                mno_id=int(d["mno_id"]),
                class_id=int(d["class_id"]),
                timestamp=int(d["timestamp"]),
                demanded={int(b): int(c) for b, c in d["demanded"].items()},
                max_price=float(d["max_price"]),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise InvalidRequest(f"malformed request record {d!r}: {exc}") from None


def load_request_batch(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise InvalidRequest("request batch must be a JSON array")
    return [SliceRequest.from_dict(d).validate() for d in data]


def dump_request_batch(requests, path):
    Path(path).write_text(
        json.dumps([r.to_dict() for r in requests], indent=2) + "\n", encoding="utf-8"
    )


class RequestBuffers:
    """Per-class FIFO buffers filled by the submission interface."""

    def __init__(self):
        self._queues = {}
        self._stamps = set()
        self.submitted = defaultdict(int)
        self.collected = defaultdict(int)

    def __len__(self):
        return sum(len(q) for q in self._queues.values())

    def classes(self):
        return sorted(self._queues)

    def buffered(self, class_id):
        return len(self._queues.get(class_id, ()))

    def peek(self, class_id):
        return list(self._queues.get(class_id, ()))

    def submit(self, request):
        request.validate()
        if request.timestamp in self._stamps:
            raise InvalidRequest(f"timestamp {request.timestamp} already used in this window")
        self._stamps.add(request.timestamp)
        self._queues.setdefault(request.class_id, deque()).append(request)
        self.submitted[request.class_id] += 1
        return request.timestamp

    def collect(self):
        # lower class_id first, FIFO by timestamp within a class
        out = []
        for cid in sorted(self._queues):
            q = self._queues[cid]
            batch = sorted(q, key=lambda r: r.timestamp)
            self.collected[cid] += len(batch)
            out.extend(batch)
            q.clear()
        self._stamps.clear()
        return out


def submit_request(buffers, request):
    return buffers.submit(request)


def collect_requests(buffers):
    return buffers.collect()


@dataclass(frozen=True)
class Admitted:
    granted: dict
    price: float

    kind = "admitted"


@dataclass(frozen=True)
class Rejected:
    reason: str

    kind = "rejected"


UNFEASIBLE = "Unfeasible"
OVER_BUDGET = "OverBudget"


@dataclass(frozen=True)
class Notification:
    mno_id: int
    decision: Admitted | Rejected

    @property
    def admitted(self):
        return isinstance(self.decision, Admitted)


@dataclass
class Outbox:
    """Messaging broker: per-MNO FIFO mailboxes, each message delivered once."""

    _boxes: dict = field(default_factory=dict)

    def send(self, n):
        self._boxes.setdefault(n.mno_id, deque()).append(n)
        return True

    def poll(self, mno_id):
        box = self._boxes.get(mno_id)
        if not box:
            return None
        return box.popleft()

    def drain(self, mno_id):
        out = []
        while (n := self.poll(mno_id)) is not None:
            out.append(n)
        return out

    def pending(self, mno_id=None):
        if mno_id is None:
            return sum(len(b) for b in self._boxes.values())
        return len(self._boxes.get(mno_id, ()))


def notify(outbox, n):
    return outbox.send(n)
