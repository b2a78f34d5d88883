import re

from bidder_selection import logger

iso_duration_regex = re.compile(
    r"^P((?P<weeks>\d+)W)?"
    r"((?P<days>\d+)D)?"
    r"(T((?P<hours>\d+)H)?"
    r"((?P<minutes>\d+)M)?"
    r"((?P<seconds>\d+(?:\.\d+)?)S)?)?$"
)


def ISO8601_to_seconds(iso_duration):
    """Seconds in an ISO-8601 duration, e.g. "PT10M" -> 600, "P1DT0.5S" -> 86400.5."""
    m = iso_duration_regex.match(iso_duration.strip())
    if not m or iso_duration.strip() in ("P", "PT"):
        raise ValueError(f"{iso_duration!r} is not an ISO-8601 duration")
    return (
        int(m.group("weeks") or 0) * 604800
        + int(m.group("days") or 0) * 86400
        + int(m.group("hours") or 0) * 3600
        + int(m.group("minutes") or 0) * 60
        + float(m.group("seconds") or 0)
    )


def parse_duration(text):
    """Seconds from a plain number ("600", "2.5") or an ISO-8601 duration ("PT10M")."""
    text = str(text).strip()
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return float(ISO8601_to_seconds(text))
    except ValueError as e:
        logger.error(f"parse_duration error: {e}")
        raise


def format_seconds(seconds):
    """Wall times for logs: "0.042s" below a minute, "H:MM:SS" above."""
    if seconds < 60:
        return f"{seconds:.3f}s"
    hours, rest = divmod(int(round(seconds)), 3600)
    minutes, secs = divmod(rest, 60)
    return "%i:%02i:%02i" % (hours, minutes, secs)
