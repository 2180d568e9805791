"""Shared HTTP plumbing for vendor calls.

Error messages carry the URL and a response snippet but never headers, so
credentials cannot leak into logs through an exception.
"""

from __future__ import annotations

import httpx

from ..errors import Upstream, VendorTimeout


def vendor_post(client: httpx.Client, url: str, body: dict, headers: dict | None = None) -> dict:
    try:
        resp = client.post(url, json=body, headers=headers)
    except httpx.TimeoutException as e:
        raise VendorTimeout(f"{url}: {e}") from e
    except httpx.HTTPError as e:
        raise Upstream(f"{url}: {e}") from e
    if resp.status_code != 200:
        raise Upstream(f"{url}: status {resp.status_code}: {resp.text[:200]}")
    try:
        return resp.json()
    except ValueError as e:
        raise Upstream(f"{url}: non-JSON body in 200 response: {e}") from e
