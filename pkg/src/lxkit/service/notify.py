"""Completion notification seam.

Email/OTP delivery is out of scope; the default notifier does nothing and a
webhook notifier covers deployments that want a push signal.
"""
from __future__ import annotations

from typing import Protocol

import httpx


class Notifier(Protocol):
    def notify(self, job_id: str, state: str) -> None: ...


class NoopNotifier:
    def notify(self, job_id: str, state: str) -> None:
        return None


class WebhookNotifier:
    def __init__(self, url: str, timeout: float = 5.0):
        self.url = url
        self.timeout = timeout

    def notify(self, job_id: str, state: str) -> None:
        try:
            httpx.post(self.url, json={"job_id": job_id, "state": state},
                       timeout=self.timeout)
        except httpx.HTTPError:
            pass  # notification is best-effort
