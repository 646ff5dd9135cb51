import logging
import socket
import threading
import time
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from sortbench import config
from sortbench import wire
from sortbench.wire import Envelope

log = logging.getLogger(__name__)

BACKENDS = ("in-process", "socket")

# Tags at the top of the u32 range are reserved for the collectives.
SCATTER_TAG = 0xFFFF_FF01
GATHER_TAG = 0xFFFF_FF02
BCAST_TAG = 0xFFFF_FF03


class TransportError(RuntimeError):
    """Base class for failures of the message-passing layer."""


class WorldShutdownError(TransportError):
    """The world was torn down while this rank was still communicating."""


class WorldTimeoutError(TransportError):
    """The world's wall-clock deadline passed."""


class RankFailedError(TransportError):
    """A rank's entry function raised; `rank` identifies it and `cause` holds the error."""

    def __init__(self, rank: int, cause: BaseException):
        super().__init__(f"Rank {rank} failed: {cause!r}")
        self.rank = rank
        self.cause = cause


class Mailbox:
    """
    Inbox of one rank. Messages wait in per-(source, tag) queues, so a receive for a
    given source and tag takes the oldest matching message regardless of other traffic.
    """
    def __init__(self, rank: int):
        self.rank = rank
        self._cond = threading.Condition()
        self._queues = defaultdict(deque)
        self._closed = False

    def put(self, source: int, tag: int, payload: list):
        with self._cond:
            if self._closed:
                raise WorldShutdownError(f"Rank {self.rank} mailbox is closed.")
            self._queues[(source, tag)].append(payload)
            self._cond.notify_all()

    def take(self, source: int, tag: int, deadline: float) -> list:
        key = (source, tag)
        with self._cond:
            while not self._queues[key]:
                if self._closed:
                    raise WorldShutdownError(f"World shut down while rank {self.rank} waited on rank {source} tag {tag}.")
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise WorldTimeoutError(f"Rank {self.rank} timed out waiting on rank {source} tag {tag}.")
                self._cond.wait(remaining)  # woken by put() or close()
            return self._queues[key].popleft()

    def close(self):
        with self._cond:
            self._closed = True
            self._cond.notify_all()


class Backend:
    """Shared delivery bookkeeping for both backends: mailboxes, traffic log, shutdown flag."""
    name = ""

    def __init__(self, size: int, message_log: list, log_lock: threading.Lock):
        self.size = size
        self.mailboxes = [Mailbox(rank) for rank in range(size)]
        self.closed = False
        self._message_log = message_log
        self._log_lock = log_lock

    def start(self):
        pass

    def deliver(self, envelope: Envelope):
        raise NotImplementedError

    def _record(self, envelope: Envelope):
        with self._log_lock:
            self._message_log.append((envelope.source_rank, envelope.dest_rank, envelope.message_tag, envelope.length))
        log.debug(f"{self.name}: rank {envelope.source_rank} -> rank {envelope.dest_rank} "
                  f"tag {envelope.message_tag} ({envelope.length} elements)")

    def shutdown(self):
        self.closed = True
        for mailbox in self.mailboxes:
            mailbox.close()


class InProcessBackend(Backend):
    """Ranks share one address space; delivery copies the payload into the destination mailbox."""
    name = "in-process"

    def deliver(self, envelope: Envelope):
        if self.closed:
            raise WorldShutdownError("Cannot send on a world that has shut down.")
        self._record(envelope)
        self.mailboxes[envelope.dest_rank].put(envelope.source_rank, envelope.message_tag, list(envelope.payload))


class SocketBackend(Backend):
    """
    Every rank listens on its own TCP port. A sender opens one connection per
    destination and reuses it, so frames between a pair arrive in send order; a reader
    thread per accepted connection decodes frames into the destination's mailbox.
    """
    name = "socket"

    def __init__(self, size: int, message_log: list, log_lock: threading.Lock,
                 host: str = config.SOCKET_HOST, port: int = config.SOCKET_PORT):
        super().__init__(size, message_log, log_lock)
        self.host = host
        self.base_port = port
        self.addresses = []
        self._listeners = []
        self._connections = {}
        self._accepted = []
        self._conn_lock = threading.Lock()
        self._threads = []

    def start(self):
        for rank in range(self.size):
            # Port 0 asks the OS for a free port.
            port = self.base_port + rank if self.base_port else 0
            listener = socket.create_server((self.host, port))
            self._listeners.append(listener)
            self.addresses.append(listener.getsockname()[:2])
            thread = threading.Thread(target=self._accept_loop, args=(rank, listener),
                                      name=f"sortbench-accept-{rank}", daemon=True)
            thread.start()
            self._threads.append(thread)
        log.info(f"Socket backend listening for {self.size} ranks at {self.addresses}.")

    def _accept_loop(self, rank: int, listener: socket.socket):
        while not self.closed:
            try:
                conn, _ = listener.accept()
            except OSError:
                return
            with self._conn_lock:
                self._accepted.append(conn)
            thread = threading.Thread(target=self._read_loop, args=(rank, conn),
                                      name=f"sortbench-reader-{rank}", daemon=True)
            thread.start()

    def _read_loop(self, rank: int, conn: socket.socket):
        stream = conn.makefile("rb")
        try:
            while True:
                envelope = wire.read_envelope(stream)
                if envelope is None:
                    return
                if envelope.dest_rank != rank:
                    log.error(f"Rank {rank} received a frame addressed to rank {envelope.dest_rank}; dropping it.")
                    continue
                self.mailboxes[rank].put(envelope.source_rank, envelope.message_tag, envelope.payload)
        except (OSError, EOFError, WorldShutdownError):
            if not self.closed:
                log.warning(f"Connection into rank {rank} closed unexpectedly.", exc_info=True)
        except wire.EnvelopeError:
            log.error(f"Malformed frame on a connection into rank {rank}.", exc_info=True)
        finally:
            stream.close()

    def _connection(self, source: int, dest: int) -> socket.socket:
        key = (source, dest)
        with self._conn_lock:
            # One connection per (source, dest) pair keeps its frames in send order.
            conn = self._connections.get(key)
            if conn is None:
                conn = socket.create_connection(self.addresses[dest])
                conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                self._connections[key] = conn
            return conn

    def deliver(self, envelope: Envelope):
        if self.closed:
            raise WorldShutdownError("Cannot send on a world that has shut down.")
        frame = wire.encode(envelope)
        self._record(envelope)
        try:
            self._connection(envelope.source_rank, envelope.dest_rank).sendall(frame)
        except OSError as e:
            if self.closed:
                raise WorldShutdownError("World shut down during send.") from e
            raise TransportError(f"Send from rank {envelope.source_rank} to rank {envelope.dest_rank} failed: {e}") from e

    def shutdown(self):
        super().shutdown()
        with self._conn_lock:
            sockets = list(self._connections.values()) + self._accepted + self._listeners
            self._connections.clear()
        for sock in sockets:
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            sock.close()


@dataclass
class RankContext:
    """One rank's identity plus its handle on the world's backend. Owned by a single thread."""
    rank: int
    size: int
    endpoint: Backend
    deadline: float

    @property
    def is_root(self) -> bool:
        return self.rank == 0


class World:
    """
    A set of `size` ranks that run one entry function concurrently and talk through a
    shared backend. Every send is appended to `message_log` as (source, dest, tag, length).
    """
    def __init__(self, size: int, backend: str = config.DEFAULT_BACKEND,
                 timeout: Optional[float] = None, host: Optional[str] = None, port: Optional[int] = None):
        if size < 1:
            raise ValueError(f"A world needs at least one rank, got {size}.")
        if backend not in BACKENDS:
            raise ValueError(f"Unknown backend '{backend}'. Choose from {BACKENDS}.")
        self.size = size
        self.backend = backend
        self.timeout = config.WORLD_TIMEOUT_SECONDS if timeout is None else timeout
        self.host = host or config.SOCKET_HOST
        self.port = config.SOCKET_PORT if port is None else port
        self.message_log = []
        self._log_lock = threading.Lock()

    def _make_backend(self) -> Backend:
        if self.backend == "socket":
            return SocketBackend(self.size, self.message_log, self._log_lock, self.host, self.port)
        return InProcessBackend(self.size, self.message_log, self._log_lock)

    def spawn(self, entry: Callable[[RankContext], object]) -> list:
        """
        Runs `entry` once per rank and returns the per-rank results in rank order.
        The first rank to raise aborts the whole world; a world still running at its
        deadline is aborted with WorldTimeoutError.
        """
        endpoint = self._make_backend()
        results = [None] * self.size
        failures = []
        finished = threading.Condition()
        remaining = [self.size]
        threads = []

        def run_rank(ctx: RankContext):
            try:
                results[ctx.rank] = entry(ctx)
            except BaseException as e:
                with finished:
                    failures.append((ctx.rank, e))
            finally:
                with finished:
                    remaining[0] -= 1
                    finished.notify_all()

        try:
            # shutdown also closes listeners opened before a failed bind.
            endpoint.start()
            deadline = time.monotonic() + self.timeout
            log.info(f"Spawning {self.size}-rank world on the {self.backend} backend (deadline {self.timeout}s).")
            for rank in range(self.size):
                ctx = RankContext(rank=rank, size=self.size, endpoint=endpoint, deadline=deadline)
                thread = threading.Thread(target=run_rank, args=(ctx,), name=f"sortbench-rank-{rank}", daemon=True)
                threads.append(thread)
                thread.start()

            with finished:
                # Wake on every finished rank; stop at the first failure or at the deadline.
                while remaining[0] and not failures:
                    left = deadline - time.monotonic()
                    if left <= 0:
                        break
                    finished.wait(left)
                first_failure = failures[0] if failures else None
                timed_out = remaining[0] > 0 and first_failure is None
        finally:
            # Closing the mailboxes unblocks any rank still waiting in recv.
            endpoint.shutdown()
            for thread in threads:
                thread.join(timeout=1.0)

        if first_failure is not None:
            rank, cause = first_failure
            if isinstance(cause, WorldTimeoutError):
                log.error(f"World timed out at rank {rank}: {cause}")
                raise WorldTimeoutError(f"World exceeded its {self.timeout}s deadline (rank {rank}: {cause})") from cause
            log.error(f"Rank {rank} failed, aborting {self.size}-rank world: {cause!r}")
            raise RankFailedError(rank, cause) from cause
        if timed_out:
            log.error(f"World exceeded its {self.timeout}s deadline with {remaining[0]} ranks still running.")
            raise WorldTimeoutError(f"World exceeded its {self.timeout}s deadline with {remaining[0]} ranks still running.")
        log.info(f"{self.size}-rank world finished after {len(self.message_log)} messages.")
        return results


def world_spawn(size: int, backend: str, entry: Callable[[RankContext], object],
                timeout: Optional[float] = None) -> list:
    return World(size, backend, timeout).spawn(entry)


def _check_peer(ctx: RankContext, peer: int, role: str):
    if not 0 <= peer < ctx.size:
        raise ValueError(f"Rank {ctx.rank}: {role} rank {peer} is outside [0, {ctx.size}).")
    if peer == ctx.rank:
        raise ValueError(f"Rank {ctx.rank} cannot use itself as {role}.")


def send(ctx: RankContext, payload: Sequence, dest: int, tag: int):
    """Eager send: returns as soon as the payload has been handed to the backend."""
    _check_peer(ctx, dest, "destination")
    ctx.endpoint.deliver(Envelope(payload=list(payload), message_tag=tag, source_rank=ctx.rank, dest_rank=dest))


def recv(ctx: RankContext, src: int, tag: int) -> list:
    """Blocks until a message from `src` with `tag` arrives, or the world's deadline passes."""
    _check_peer(ctx, src, "source")
    return ctx.endpoint.mailboxes[ctx.rank].take(src, tag, ctx.deadline)


def scatter(ctx: RankContext, sendbuf: Optional[Sequence], root: int = 0) -> list:
    """
    The root splits `sendbuf` into `size` equal contiguous chunks; rank i gets chunk i.
    The root's length must divide evenly; this is checked before anything is sent.
    """
    if ctx.rank != root:
        return recv(ctx, root, SCATTER_TAG)
    if sendbuf is None:
        raise ValueError(f"Scatter root {root} must supply a send buffer.")
    if len(sendbuf) % ctx.size:
        raise ValueError(f"Scatter length {len(sendbuf)} is not divisible by world size {ctx.size}.")
    chunk = len(sendbuf) // ctx.size
    for rank in range(ctx.size):
        if rank != root:
            send(ctx, sendbuf[rank * chunk:(rank + 1) * chunk], rank, SCATTER_TAG)
    return list(sendbuf[root * chunk:(root + 1) * chunk])


def gather(ctx: RankContext, sendbuf: Sequence, root: int = 0) -> Optional[list]:
    """Concatenates every rank's buffer at the root in rank order; other ranks get None."""
    if ctx.rank != root:
        send(ctx, sendbuf, root, GATHER_TAG)
        return None
    gathered = []
    for rank in range(ctx.size):
        part = list(sendbuf) if rank == root else recv(ctx, rank, GATHER_TAG)
        if len(part) != len(sendbuf):
            raise ValueError(f"Gather expected {len(sendbuf)} elements from rank {rank}, got {len(part)}.")
        gathered.extend(part)
    return gathered


def bcast(ctx: RankContext, data: Optional[Sequence], root: int = 0) -> list:
    """Every rank returns its own copy of the root's data."""
    if ctx.rank != root:
        return recv(ctx, root, BCAST_TAG)
    if data is None:
        raise ValueError(f"Broadcast root {root} must supply data.")
    for rank in range(ctx.size):
        if rank != root:
            send(ctx, data, rank, BCAST_TAG)
    return list(data)
