"""Mock network analyzer speaking a small SCPI dialect, plus its client.

Dialect (ASCII, one ``\\n``-terminated line per command and per reply):

=========================  ==============================================
``*IDN?``                  ``MOCKVNA,OHMSCOPE,0,1.0``
``:SENS:FREQ:STAR <hz>``   sweep start (``OK``); ``...STAR?`` echoes it
``:SENS:FREQ:STOP <hz>``   sweep stop
``:SENS:SWE:POIN <n>``     number of points
``:SENS:AVER:COUN <m>``    sweeps averaged per capture
``:DEV:PROG <mnemonic>``   instruction the device under test executes
``:INIT:IMM``              trigger one (averaged) capture
``:CALC:DATA:SDAT?``       ``re1,im1,...,reN,imN`` of the last capture
=========================  ==============================================

Errors come back as ``ERR <code> <text>``:
100 sweep not configured, 101 unknown instruction, 102 malformed or unknown
command, 103 bad number, 104 nothing captured yet, 105 no instruction
selected.

Numbers travel as shortest round-trip decimals. Averaging happens in the
reflection domain on the server. Every trigger draws its noise from its own
``SeedSequence(seed, spawn_key=(trigger_index,))`` stream, so a fixed seed
and command sequence yield the same byte stream.
"""
from __future__ import annotations

import argparse
import logging
import socket
import socketserver
import threading

import numpy as np

from .errors import InstrumentError, ProtocolError, TransportError
from .isa import CLASS_MNEMONICS, as_isa, spec_for
from .synth import FrequencyGrid, ProfileModel, class_profiles, default_sigma, profile_impedance
from .vna import DEFAULT_Z_REF, ReflectionTrace, SweepConfig, impedance_to_gamma

log = logging.getLogger(__name__)

IDN = "MOCKVNA,OHMSCOPE,0,1.0"
DEFAULT_TIMEOUT = 10.0


class SyntheticSource:
    """Impedance sweeps of the synthetic device; ``sigma=None`` means the dataset default."""

    def __init__(self, isa="FPGA12", model: ProfileModel | None = None, sigma=0.0, seed=0,
                 z_ref=DEFAULT_Z_REF):
        self.isa = as_isa(isa)
        self.model = model or ProfileModel()
        self.sigma = sigma
        self.seed = int(seed)
        self.z_ref = z_ref
        self.labels = CLASS_MNEMONICS[self.isa]

    def sigma_for(self, grid: FrequencyGrid) -> float:
        if self.sigma is None:
            return default_sigma(class_profiles(self.isa, self.model, grid))
        return float(self.sigma)

    def capture(self, label, grid: FrequencyGrid, averaging: int, trigger_index: int):
        """Mean reflection coefficient over ``averaging`` noisy sweeps."""
        byte = spec_for(self.isa, label).opcode ^ self.model.mask(self.isa)
        base = np.asarray(profile_impedance(byte, self.model, grid.values()), dtype=complex)
        sigma = self.sigma_for(grid)
        if sigma == 0:
            t_re, t_im = impedance_to_gamma(base, self.z_ref)
            return t_re, t_im
        ss = np.random.SeedSequence(self.seed, spawn_key=(int(trigger_index),))
        z = np.random.Generator(np.random.PCG64(ss)).standard_normal((averaging, grid.points, 2))
        sweeps = base[None, :] + sigma * (z[..., 0] + 1j * z[..., 1])
        t_re, t_im = impedance_to_gamma(sweeps, self.z_ref)
        return t_re.mean(axis=0), t_im.mean(axis=0)


def _fmt(x) -> str:
    return repr(float(x))


class _Session:
    """Per-connection instrument state."""

    def __init__(self, server):
        self.server = server
        self.start = self.stop = self.points = None
        self.averaging = 1
        self.label = None
        self.data = None

    def configured(self):
        return None not in (self.start, self.stop, self.points)

    def handle(self, line: str) -> str:
        parts = line.strip().split()
        if not parts:
            return "ERR 102 empty command"
        head, args = parts[0].upper(), parts[1:]
        if head == "*IDN?" and not args:
            return IDN
        setters = {":SENS:FREQ:STAR": "start", ":SENS:FREQ:STOP": "stop",
                   ":SENS:SWE:POIN": "points", ":SENS:AVER:COUN": "averaging"}
        if head.endswith("?") and head[:-1] in setters and not args:
            value = getattr(self, setters[head[:-1]])
            if value is None:
                return "ERR 100 sweep not configured"
            return str(value) if isinstance(value, int) else _fmt(value)
        if head in setters:
            if len(args) != 1:
                return f"ERR 102 {head} takes one argument"
            return self._set(setters[head], args[0])
        if head == ":DEV:PROG":
            if len(args) != 1:
                return "ERR 102 :DEV:PROG takes one mnemonic"
            if args[0].upper() not in self.server.source.labels:
                return f"ERR 101 unknown instruction {args[0]}"
            self.label = args[0].upper()
            return "OK"
        if head == ":DEV:PROG?" and not args:
            return self.label if self.label else "ERR 105 no instruction selected"
        if head == ":INIT:IMM" and not args:
            return self._trigger()
        if head == ":CALC:DATA:SDAT?" and not args:
            if not self.configured():
                return "ERR 100 sweep not configured"
            if self.data is None:
                return "ERR 104 no capture; send :INIT:IMM first"
            return self.data
        return f"ERR 102 unknown command {parts[0]}"

    def _set(self, name, text):
        try:
            value = int(text) if name in ("points", "averaging") else float(text)
        except ValueError:
            return f"ERR 103 bad number {text!r}"
        if name in ("points", "averaging") and value < 1 or name in ("start", "stop") and not value > 0:
            return f"ERR 103 out of range {text!r}"
        if name == "points" and self.server.fixed_points is not None:
            value = self.server.fixed_points
        setattr(self, name, value)
        self.data = None
        return "OK"

    def _trigger(self):
        if not self.configured():
            return "ERR 100 sweep not configured"
        if self.label is None:
            return "ERR 105 no instruction selected"
        try:
            grid = FrequencyGrid(self.start, self.stop, self.points)
        except ValueError as exc:
            return f"ERR 103 {exc}"
        t_re, t_im = self.server.source.capture(self.label, grid, self.averaging,
                                                self.server.next_trigger())
        self.data = ",".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(t_re.tolist(), t_im.tolist()))
        return "OK"


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        session = _Session(self.server)
        for raw in self.rfile:
            try:
                line = raw.decode("ascii")
            except UnicodeDecodeError:
                reply = "ERR 102 non-ASCII command"
            else:
                reply = session.handle(line)
            self.wfile.write((reply + "\n").encode("ascii"))
            self.wfile.flush()


class MockVnaServer(socketserver.TCPServer):
    """Sequential (one session at a time) mock instrument."""

    allow_reuse_address = True

    def __init__(self, address, source: SyntheticSource, fixed_points=None):
        self.source = source
        self.fixed_points = fixed_points
        self._triggers = 0
        self._lock = threading.Lock()
        super().__init__(address, _Handler)

    def next_trigger(self) -> int:
        with self._lock:
            index = self._triggers
            self._triggers += 1
        return index

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


def serve(endpoint: str, source: SyntheticSource, fixed_points=None) -> MockVnaServer:
    """Bind a server on ``host:port`` (port 0 picks a free one); caller runs it."""
    return MockVnaServer(parse_endpoint(endpoint), source, fixed_points)


def parse_endpoint(endpoint: str):
    host, sep, port = str(endpoint).rpartition(":")
    if not sep or not host:
        raise TransportError(f"endpoint must be host:port, got {endpoint!r}")
    try:
        return host, int(port)
    except ValueError:
        raise TransportError(f"bad port in endpoint {endpoint!r}") from None


class VnaClient:
    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        address = parse_endpoint(endpoint)
        try:
            self._sock = socket.create_connection(address, timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {endpoint}: {exc}") from None
        self._file = self._sock.makefile("rwb")

    def close(self):
        self._file.close()
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def query(self, command: str) -> str:
        try:
            self._file.write((command + "\n").encode("ascii"))
            self._file.flush()
            raw = self._file.readline()
        except OSError as exc:
            raise TransportError(f"{self.endpoint}: {exc}") from None
        if not raw.endswith(b"\n"):
            raise TransportError(f"{self.endpoint}: connection closed mid-reply")
        reply = raw.decode("ascii").rstrip("\n")
        if reply.startswith("ERR "):
            code, _, text = reply[4:].partition(" ")
            raise InstrumentError(int(code) if code.isdigit() else code, text)
        return reply

    def command(self, command: str):
        reply = self.query(command)
        if reply != "OK":
            raise ProtocolError(f"{command!r}: expected OK, got {reply[:60]!r}")

    def identify(self) -> str:
        return self.query("*IDN?")

    def configure(self, config: SweepConfig):
        g = config.grid
        self.command(f":SENS:FREQ:STAR {_fmt(g.start)}")
        self.command(f":SENS:FREQ:STOP {_fmt(g.stop)}")
        self.command(f":SENS:SWE:POIN {int(g.points)}")
        self.command(f":SENS:AVER:COUN {int(config.averaging_count)}")
        reported = self.query(":SENS:SWE:POIN?")
        if reported != str(int(g.points)):
            raise ProtocolError(
                f"points mismatch: config requests {int(g.points)}, instrument reports {reported}")

    def fetch(self, grid: FrequencyGrid) -> ReflectionTrace:
        reply = self.query(":CALC:DATA:SDAT?")
        fields = reply.split(",")
        if len(fields) != 2 * grid.points:
            raise ProtocolError(
                f"data arity mismatch: expected {2 * grid.points} values "
                f"({grid.points} points), got {len(fields)}")
        try:
            values = np.array([float(v) for v in fields])
        except ValueError:
            raise ProtocolError("non-numeric value in data reply") from None
        return ReflectionTrace(values[0::2], values[1::2], grid)


def acquire(client: VnaClient, config: SweepConfig, label: str, configure=True) -> ReflectionTrace:
    """Configure, select ``label``, trigger and fetch one averaged trace."""
    if configure:
        client.configure(config)
    client.command(f":DEV:PROG {label}")
    client.command(":INIT:IMM")
    return client.fetch(config.grid)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="python -m ohmscope.scpi",
                                     description="Run the mock network analyzer.")
    parser.add_argument("--endpoint", default="127.0.0.1:5025")
    parser.add_argument("--isa", default="FPGA12")
    parser.add_argument("--sigma", default="0", help="noise std in ohms, or 'auto'")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    sigma = None if args.sigma == "auto" else float(args.sigma)
    server = serve(args.endpoint, SyntheticSource(args.isa, sigma=sigma, seed=args.seed))
    print(f"mock VNA listening on {server.endpoint}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


if __name__ == "__main__":
    main()
