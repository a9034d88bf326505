from __future__ import annotations

import threading
import time

import pytest
import uvicorn

from lantree_server.app import create_app

# Secondary acceptance criteria register one line each (same convention as
# the core suite).
ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "secondary acceptance criteria")
    for name, ok in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}")


class LiveServer:
    def __init__(self, registry: dict) -> None:
        config = uvicorn.Config(
            create_app(registry), host="127.0.0.1", port=0, log_level="warning", access_log=False
        )
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)
        self.thread.start()
        deadline = time.monotonic() + 15
        while not self.server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server failed to start")
            time.sleep(0.01)
        sock = self.server.servers[0].sockets[0]
        self.base_url = f"http://127.0.0.1:{sock.getsockname()[1]}"

    def stop(self) -> None:
        self.server.should_exit = True
        self.thread.join(timeout=10)


@pytest.fixture()
def live_server():
    servers: list[LiveServer] = []

    def start(registry: dict) -> LiveServer:
        server = LiveServer(registry)
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.stop()


@pytest.fixture(scope="session")
def session_server():
    servers: list[LiveServer] = []

    def start(registry: dict) -> LiveServer:
        server = LiveServer(registry)
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.stop()
