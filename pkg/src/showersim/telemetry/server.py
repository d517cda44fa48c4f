"""HTTP front end for the telemetry store.

Endpoints:
  POST /update                                   write one entry (form or query params)
  POST /channels                                 create a channel (local admin, no key)
  GET  /channels/<id>/feeds.json                 last entries, oldest first
  GET  /channels/<id>/fields/<k>/last.txt        newest value of one field

In simulation mode (--sim-time) the server trusts the client-supplied
created_at so replays are deterministic; otherwise it stamps entries with
its own clock.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional
from urllib.parse import parse_qs, urlparse

from .store import (
    MAX_FIELDS,
    AuthenticationError,
    NotFoundError,
    TelemetryStore,
    ValidationError,
)

logger = logging.getLogger(__name__)

_FEEDS_RE = re.compile(r"^/channels/(\d+)/feeds\.json$")
_LAST_RE = re.compile(r"^/channels/(\d+)/fields/(\d+)/last\.txt$")


def _coerce(text: str):
    """Numeric-or-text: prefer int, then float, else keep the string."""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


class TelemetryRequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    disable_nagle_algorithm = True  # small request/response pairs; avoid delayed-ACK stalls

    def log_message(self, fmt, *args):  # route access logs away from stderr
        logger.debug("%s " + fmt, self.address_string(), *args)

    # -- plumbing ----------------------------------------------------------

    def _params(self):
        url = urlparse(self.path)
        params = parse_qs(url.query)
        if self.command == "POST":
            length = int(self.headers.get("Content-Length") or 0)
            if length:
                body = self.rfile.read(length).decode("utf-8")
                for key, values in parse_qs(body).items():
                    params.setdefault(key, []).extend(values)
        return url.path, params

    @staticmethod
    def _first(params, key, default=None):
        values = params.get(key)
        return values[0] if values else default

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_text(self, status: int, text: str) -> None:
        self._send(status, text.encode("utf-8"), "text/plain; charset=utf-8")

    def _send_json(self, status: int, obj) -> None:
        self._send(status, json.dumps(obj).encode("utf-8"), "application/json")

    def _dispatch(self, handler, *args) -> None:
        try:
            handler(*args)
        except AuthenticationError:
            self._send_text(401, "invalid key")
        except NotFoundError as exc:
            self._send_text(404, str(exc))
        except ValidationError as exc:
            self._send_text(400, str(exc))

    # -- routes --------------------------------------------------------------

    def do_POST(self):
        path, params = self._params()
        if path == "/update":
            self._dispatch(self._post_update, params)
        elif path == "/channels":
            self._dispatch(self._post_channels, params)
        else:
            self._send_text(404, "not found")

    def do_GET(self):
        path, params = self._params()
        feeds = _FEEDS_RE.match(path)
        last = _LAST_RE.match(path)
        if feeds:
            self._dispatch(self._get_feeds, int(feeds.group(1)), params)
        elif last:
            self._dispatch(self._get_last, int(last.group(1)), int(last.group(2)), params)
        else:
            self._send_text(404, "not found")

    def _post_update(self, params) -> None:
        api_key = self._first(params, "api_key")
        if api_key is None:
            raise AuthenticationError("invalid key")
        values = {}
        for pos in range(1, MAX_FIELDS + 1):
            raw = self._first(params, f"field{pos}")
            if raw is not None:
                values[pos] = _coerce(raw)
        if self.server.sim_time:
            raw_created = self._first(params, "created_at", "0")
            try:
                created_at = float(raw_created)
            except ValueError:
                raise ValidationError("created_at must be numeric") from None
        else:
            created_at = None  # stamped by the store clock under the channel lock
        entry_id = self.server.store.write_update(api_key, values, created_at)
        self._send_text(200, str(entry_id))

    def _post_channels(self, params) -> None:
        name = self._first(params, "name")
        if not name:
            raise ValidationError("name is required")
        fields = params.get("field", [])
        visibility = self._first(params, "visibility", "private")
        interval_raw = self._first(params, "min_post_interval_s")
        try:
            interval = float(interval_raw) if interval_raw is not None else 1.0
        except ValueError:
            raise ValidationError("min_post_interval_s must be numeric") from None
        channel = self.server.store.create_channel(
            name, fields, visibility=visibility, min_post_interval_s=interval
        )
        self._send_json(
            200,
            {
                "channel_id": channel.channel_id,
                "write_key": channel.write_key,
                "read_key": channel.read_key,
            },
        )

    def _get_feeds(self, channel_id: int, params) -> None:
        read_key = self._first(params, "api_key", "")
        user = self._first(params, "user")
        raw_results = self._first(params, "results", "100")
        try:
            results = int(raw_results)
        except ValueError:
            raise ValidationError("results must be an integer") from None
        entries = self.server.store.read_feed(channel_id, read_key, results, user=user)
        channel = self.server.store.channel(channel_id)
        channel_obj = {"id": channel.channel_id, "name": channel.name}
        for position, field_name in enumerate(channel.field_names, start=1):
            channel_obj[f"field{position}"] = field_name
        feeds = []
        for entry in entries:
            row = {"created_at": entry.created_at, "entry_id": entry.entry_id}
            for position in sorted(entry.values):
                row[f"field{position}"] = entry.values[position]
            feeds.append(row)
        self._send_json(200, {"channel": channel_obj, "feeds": feeds})

    def _get_last(self, channel_id: int, position: int, params) -> None:
        read_key = self._first(params, "api_key", "")
        user = self._first(params, "user")
        value = self.server.store.read_last_field(channel_id, read_key, position, user=user)
        if value is None:
            self._send_text(404, "")
        else:
            self._send_text(200, _fmt(value))


class TelemetryHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(
        self,
        store: TelemetryStore,
        host: str = "127.0.0.1",
        port: int = 0,
        sim_time: bool = False,
    ):
        super().__init__((host, port), TelemetryRequestHandler)
        self.store = store
        self.sim_time = sim_time
        self._thread: Optional[threading.Thread] = None

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "TelemetryHTTPServer":
        """Serve in a background thread (in-process mode)."""
        self._thread = threading.Thread(
            target=self.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="telemetry-serve", description="Serve the channel telemetry API over HTTP."
    )
    parser.add_argument("--port", type=int, default=8266)
    parser.add_argument("--data-dir", required=True)
    parser.add_argument(
        "--sim-time",
        action="store_true",
        help="trust client-supplied created_at timestamps (deterministic replays)",
    )
    args = parser.parse_args(argv)

    store = TelemetryStore(args.data_dir)
    server = TelemetryHTTPServer(store, port=args.port, sim_time=args.sim_time)
    print(f"listening on {server.url}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
        store.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
