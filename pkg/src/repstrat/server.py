"""JSON-over-HTTP facade exposing plan, sample, estimate, and simulate.

Stateless between requests except for an in-memory store of uploaded
populations keyed by the SHA-256 of the CSV text: a request may carry
``population_csv`` (registered and echoed back as ``population_hash``) or a
previously returned ``population_hash``. Responses reuse the CLI report
builders, so facade output equals CLI output field for field.
"""

from __future__ import annotations

import hashlib
import io
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import __version__
from .allocation import allocate, parse_plan_spec
from .errors import RepStratError, SpecError
from .estimation import (
    combined_ratio_estimate,
    difference_estimate,
    load_audited_csv,
    parse_sample_summaries,
    separate_ratio_estimate,
    sparse_stats_for_frame,
    stats_for_frame,
)
from .montecarlo import SyntheticPopulationSpec, run_coverage
from .population import ClaimRecord, load_population, parse_strata_config, stratify
from .reports import (
    estimate_response,
    plan_response,
    representativeness_dict,
    sample_response,
)
from .sampling import check_representativeness, draw_sample

MAX_BODY_BYTES = 64 * 1024 * 1024


class HttpApiError(Exception):
    def __init__(self, status: int, payload: dict):
        super().__init__(payload.get("error", {}).get("message", ""))
        self.status = status
        self.payload = payload


class PopulationStore:
    """Content-addressed claim lists; safe for concurrent insert/lookup."""

    def __init__(self):
        self._lock = threading.Lock()
        self._items: dict[str, tuple[ClaimRecord, ...]] = {}

    def put_csv(self, text: str) -> tuple[str, tuple[ClaimRecord, ...]]:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        with self._lock:
            cached = self._items.get(digest)
        if cached is not None:
            return digest, cached
        claims = tuple(load_population(io.StringIO(text)))
        with self._lock:
            self._items[digest] = claims
        return digest, claims

    def get(self, digest: str) -> tuple[ClaimRecord, ...]:
        with self._lock:
            claims = self._items.get(digest)
        if claims is None:
            raise HttpApiError(
                404,
                {"error": {"type": "UnknownPopulation",
                           "message": f"unknown population hash {digest!r}",
                           "details": {"population_hash": digest}}},
            )
        return claims


def _error_payload(exc: RepStratError) -> dict:
    return {"error": exc.to_json_dict()}


class _Handler(BaseHTTPRequestHandler):
    server_version = f"repstrat/{__version__}"
    store: PopulationStore = None  # set by serve()

    # -- plumbing ---------------------------------------------------------
    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send(self, status: int, doc: dict) -> None:
        body = json.dumps(doc, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY_BYTES:
            raise HttpApiError(
                413, {"error": {"type": "PayloadTooLarge",
                                "message": f"body exceeds {MAX_BODY_BYTES} bytes",
                                "details": {}}})
        raw = self.rfile.read(length)
        try:
            doc = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise HttpApiError(
                400, {"error": {"type": "BadJson", "message": str(exc), "details": {}}})
        if not isinstance(doc, dict):
            raise HttpApiError(
                400, {"error": {"type": "BadJson",
                                "message": "request body must be a JSON object",
                                "details": {}}})
        return doc

    def _population(self, doc: dict):
        if "population_csv" in doc:
            return self.store.put_csv(doc["population_csv"])
        if "population_hash" in doc:
            digest = doc["population_hash"]
            return digest, self.store.get(digest)
        raise HttpApiError(
            400, {"error": {"type": "SpecError",
                            "message": "provide population_csv or population_hash",
                            "details": {}}})

    def _frame(self, doc: dict):
        digest, claims = self._population(doc)
        if "strata" not in doc:
            raise HttpApiError(
                400, {"error": {"type": "SpecError",
                                "message": "missing 'strata' config", "details": {}}})
        boundaries, threshold = parse_strata_config(doc["strata"])
        return digest, stratify(claims, boundaries, threshold)

    # -- routes -----------------------------------------------------------
    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        if self.path == "/health":
            self._send(200, {"status": "ok", "version": __version__})
        else:
            self._send(404, {"error": {"type": "NotFound",
                                       "message": f"unknown path {self.path}",
                                       "details": {}}})

    def do_POST(self):
        routes = {
            "/plan": self._post_plan,
            "/sample": self._post_sample,
            "/estimate": self._post_estimate,
            "/simulate": self._post_simulate,
        }
        handler = routes.get(self.path)
        try:
            if handler is None:
                raise HttpApiError(
                    404, {"error": {"type": "NotFound",
                                    "message": f"unknown path {self.path}",
                                    "details": {}}})
            doc = self._read_json()
            status, payload = handler(doc)
            self._send(status, payload)
        except HttpApiError as exc:
            self._send(exc.status, exc.payload)
        except RepStratError as exc:
            self._send(400, _error_payload(exc))

    def _plan_spec(self, doc: dict):
        if "plan_spec" not in doc:
            raise HttpApiError(
                400, {"error": {"type": "SpecError",
                                "message": "missing 'plan_spec'", "details": {}}})
        return parse_plan_spec(doc["plan_spec"])

    def _post_plan(self, doc: dict):
        digest, frame = self._frame(doc)
        plan = allocate(self._plan_spec(doc), frame)
        payload = plan_response(frame, plan)
        payload["population_hash"] = digest
        return 200, payload

    def _post_sample(self, doc: dict):
        digest, frame = self._frame(doc)
        plan = allocate(self._plan_spec(doc), frame)
        if "seed" not in doc:
            raise SpecError("missing 'seed'")
        seed = doc["seed"]
        if not isinstance(seed, int):
            raise SpecError(f"seed must be an integer, got {seed!r}")
        sample = draw_sample(frame, plan, seed)
        g = doc.get("overall_g", plan.g)
        report = check_representativeness(frame, sample, plan.g_i, g)
        payload = sample_response(frame, sample, report)
        payload["population_hash"] = digest
        return 200, payload

    def _post_estimate(self, doc: dict):
        digest, frame = self._frame(doc)
        if "audited_csv" not in doc:
            raise SpecError("missing 'audited_csv'")
        items = load_audited_csv(io.StringIO(doc["audited_csv"]))
        beta = float(doc.get("beta", 0.05))
        if doc.get("sample_stats") is not None:
            summaries = parse_sample_summaries(doc["sample_stats"])
            stats = sparse_stats_for_frame(items, summaries, frame)
        else:
            stats = stats_for_frame(items, frame)
        reports = [
            difference_estimate(frame, stats, beta),
            separate_ratio_estimate(frame, stats, beta),
            combined_ratio_estimate(frame, stats, beta),
        ]
        payload = estimate_response(frame, reports, beta)
        payload["population_hash"] = digest
        return 200, payload

    def _post_simulate(self, doc: dict):
        if "spec" not in doc:
            raise SpecError("missing 'spec'")
        spec = SyntheticPopulationSpec.from_json(doc["spec"])
        plan_spec = self._plan_spec(doc)
        report = run_coverage(
            spec,
            plan_spec,
            replications=int(doc.get("replications", 1000)),
            beta=float(doc.get("beta", 0.05)),
            overall_g=doc.get("overall_g"),
            overall_g_fraction=doc.get("overall_g_fraction"),
        )
        return 200, report.to_json_dict()


def make_server(listen: str) -> ThreadingHTTPServer:
    """Build (but do not start) the facade server; port 0 picks a free port."""
    host, _, port_text = listen.rpartition(":")
    if not host:
        raise SpecError(f"listen address must be host:port, got {listen!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise SpecError(f"bad port in listen address {listen!r}") from None
    handler = type("Handler", (_Handler,), {"store": PopulationStore()})
    return ThreadingHTTPServer((host, port), handler)


def serve(listen: str) -> None:
    server = make_server(listen)
    host, port = server.server_address[:2]
    print(f"repstrat facade listening on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
