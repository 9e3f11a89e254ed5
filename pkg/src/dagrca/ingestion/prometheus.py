"""Minimal client for the Prometheus v1 ``query_range`` endpoint."""
import json
import math
import urllib.error
import urllib.parse
import urllib.request
from concurrent.futures import ThreadPoolExecutor

from ..errors import ContractError, FetchError
from .series import RawSeries

DEFAULT_TIMEOUT = 10.0
DEFAULT_MAX_IN_FLIGHT = 4


def query_range_url(base_url, query, window):
    params = urllib.parse.urlencode({
        "query": query,
        "start": repr(float(window.start)),
        "end": repr(float(window.end)),
        "step": repr(float(window.step)),
    })
    return f"{base_url.rstrip('/')}/api/v1/query_range?{params}"


def _get(url, timeout):
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read()


def parse_query_range(metric_id, body):
    """Turn a ``query_range`` response body into a :class:`RawSeries`.

    Samples whose value is NaN or infinite (Prometheus emits them for
    e.g. 0/0 rates) are dropped and left as gaps for alignment.
    """
    try:
        doc = json.loads(body)
    except (ValueError, UnicodeDecodeError) as exc:
        raise FetchError(f"{metric_id}: response is not JSON ({exc})", metric_id) from None
    if not isinstance(doc, dict):
        raise FetchError(f"{metric_id}: unexpected response envelope", metric_id)
    if doc.get("status") != "success":
        msg = doc.get("error") or doc.get("errorType") or "unknown error"
        raise FetchError(f"{metric_id}: server returned status {doc.get('status')!r}: {msg}",
                         metric_id)
    data = doc.get("data") or {}
    result = data.get("result")
    if not isinstance(result, list):
        raise FetchError(f"{metric_id}: response has no result list", metric_id)
    if len(result) != 1:
        raise FetchError(
            f"{metric_id}: query returned {len(result)} series; it must aggregate to exactly one",
            metric_id)
    times, values = [], []
    for pair in result[0].get("values") or []:
        try:
            t, text = pair
            t = float(t)
            v = float(text)
        except (TypeError, ValueError):
            raise FetchError(f"{metric_id}: unparseable sample {pair!r}", metric_id) from None
        if not math.isfinite(t):
            raise FetchError(f"{metric_id}: unparseable timestamp {pair!r}", metric_id)
        if math.isfinite(v):
            times.append(t)
            values.append(v)
    try:
        return RawSeries(metric_id, times, values)
    except ContractError as exc:
        raise FetchError(f"{metric_id}: {exc}", metric_id) from None


def fetch_prometheus(base_url, queries, window, timeout=DEFAULT_TIMEOUT,
                     max_in_flight=DEFAULT_MAX_IN_FLIGHT, getter=None):
    """Run one range query per ``(metric_id, query)`` pair.

    At most ``max_in_flight`` requests run at once. Results come back in
    the order of ``queries`` whatever order the requests finish in.
    ``getter(url, timeout) -> bytes`` can replace the HTTP call.
    """
    queries = list(queries)
    if not queries:
        raise ContractError("no queries given")
    if max_in_flight < 1:
        raise ContractError("max_in_flight must be at least 1")
    getter = getter or _get

    def one(item):
        metric_id, query = item
        url = query_range_url(base_url, query, window)
        try:
            body = getter(url, timeout)
        except urllib.error.HTTPError as exc:
            raise FetchError(f"{metric_id}: HTTP {exc.code} from {base_url}", metric_id) from None
        except (urllib.error.URLError, OSError) as exc:
            reason = getattr(exc, "reason", exc)
            raise FetchError(f"{metric_id}: request failed ({reason})", metric_id) from None
        return parse_query_range(metric_id, body)

    with ThreadPoolExecutor(max_workers=min(max_in_flight, len(queries))) as pool:
        return list(pool.map(one, queries))


def read_queries(path):
    """Query file: one ``metric_id<TAB or whitespace>promql`` per line; ``#`` comments."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ContractError(f"query line needs 'metric_id query': {line!r}")
            out.append((parts[0], parts[1]))
    return out
