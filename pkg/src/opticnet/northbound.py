"""Northbound REST-style interface of the controller.

Paths are the contract; bodies are JSON documents:

    POST /requests              {src, dst, rate_gbps}
    GET  /requests/{id}
    GET  /topology
    GET  /routing-space
    POST /events/link-failure   {link_id}
    GET  /lightpaths

Workflows are serialized: one controller operation runs at a time, requests
arriving mid-workflow queue on the lock.
"""

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import AgentError, NotReadyError, OpticnetError, TopologyError


def lightpath_doc(lp) -> dict:
    return {"id": lp.lp_id, "request_id": lp.request_id,
            "nodes": list(lp.node_seq), "links": list(lp.links),
            "channel": lp.channel, "format": lp.format_name,
            "rate_gbps": lp.rate_gbps, "state": lp.state}


def request_doc(controller, request) -> dict:
    return {"id": request.request_id, "src": request.src, "dst": request.dst,
            "rate_gbps": request.rate_gbps, "state": request.state,
            "shortfall_gbps": request.shortfall_gbps,
            "lightpaths": [lightpath_doc(controller.lightpaths[i])
                           for i in request.lightpath_ids]}


class NorthboundServer:
    """Threaded HTTP server wrapping one controller instance."""

    def __init__(self, controller, failure_injector=None,
                 host="127.0.0.1", port=0):
        self.controller = controller
        self.failure_injector = failure_injector
        self.workflow_lock = threading.Lock()
        upstream = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _reply(self, status, doc):
                payload = json.dumps(doc, sort_keys=True).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def _body(self):
                length = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(length) if length else b"{}"
                try:
                    doc = json.loads(raw.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError):
                    return None
                return doc if isinstance(doc, dict) else None

            def do_GET(self):
                with upstream.workflow_lock:
                    try:
                        self._route_get()
                    except NotReadyError as exc:
                        self._reply(503, {"error": str(exc)})
                    except OpticnetError as exc:
                        self._reply(500, {"error": str(exc)})

            def do_POST(self):
                with upstream.workflow_lock:
                    try:
                        self._route_post()
                    except NotReadyError as exc:
                        self._reply(503, {"error": str(exc)})
                    except OpticnetError as exc:
                        self._reply(500, {"error": str(exc)})

            def _route_get(self):
                controller = upstream.controller
                if self.path == "/topology":
                    if not controller.provisioned:
                        raise NotReadyError("network not provisioned yet")
                    self._reply(200, controller.abstraction.to_doc())
                    return
                if self.path == "/routing-space":
                    if not controller.provisioned:
                        raise NotReadyError("network not provisioned yet")
                    self._reply(200, controller.routing.summary(
                        controller.abstraction))
                    return
                if self.path == "/lightpaths":
                    self._reply(200, {"lightpaths": [
                        lightpath_doc(lp) for lp in
                        sorted(controller.lightpaths.values(),
                               key=lambda l: l.lp_id)]})
                    return
                match = re.fullmatch(r"/requests/([A-Za-z0-9_-]+)", self.path)
                if match:
                    request = controller.requests.get(match.group(1))
                    if request is None:
                        self._reply(404, {"error": f"no request "
                                                   f"{match.group(1)!r}"})
                        return
                    self._reply(200, request_doc(controller, request))
                    return
                self._reply(404, {"error": f"no route {self.path!r}"})

            def _route_post(self):
                controller = upstream.controller
                if self.path == "/requests":
                    body = self._body()
                    if body is None or not {"src", "dst",
                                            "rate_gbps"} <= set(body):
                        self._reply(400, {"error": "body must carry src, "
                                                   "dst, rate_gbps"})
                        return
                    try:
                        request = controller.submit_request(
                            body["src"], body["dst"], int(body["rate_gbps"]))
                    except OpticnetError as exc:
                        self._reply(400, {"error": str(exc)})
                        return
                    self._reply(200, request_doc(controller, request))
                    return
                if self.path == "/events/link-failure":
                    body = self._body()
                    if body is None or "link_id" not in body:
                        self._reply(400, {"error": "body must carry link_id"})
                        return
                    link_id = body["link_id"]
                    if controller.provisioned and \
                            link_id not in controller.abstraction.links:
                        self._reply(404, {"error": f"unknown link "
                                                   f"{link_id!r}"})
                        return
                    try:
                        if upstream.failure_injector is not None:
                            upstream.failure_injector(link_id)
                        report = controller.handle_failure(link_id)
                    except TopologyError as exc:
                        self._reply(404, {"error": str(exc)})
                        return
                    except AgentError as exc:
                        self._reply(409, {"error": str(exc)})
                        return
                    self._reply(200, report.to_doc())
                    return
                self._reply(404, {"error": f"no route {self.path!r}"})

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._thread = None

    @property
    def address(self) -> tuple:
        return self._server.server_address

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}"

    def start(self):
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="northbound", daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._server.shutdown()
        self._server.server_close()
        if self._thread:
            self._thread.join(timeout=5)
