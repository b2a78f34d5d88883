import pytest

from bidder_selection.timeformat import ISO8601_to_seconds, format_seconds, parse_duration


@pytest.mark.parametrize(
    "text,seconds",
    [
        ("PT1H2M10S", 3730),
        ("PT10M", 600),
        ("P1DT1S", 86401),
        ("P2W", 1209600),
        ("PT0.5S", 0.5),
        ("P1DT0.5S", 86400.5),
    ],
)
def test_iso8601_to_seconds(text, seconds):
    assert ISO8601_to_seconds(text) == seconds


@pytest.mark.parametrize("text", ["", "P", "PT", "10 minutes", "T10M"])
def test_iso8601_to_seconds_rejects(text):
    with pytest.raises(ValueError):
        ISO8601_to_seconds(text)


@pytest.mark.parametrize(
    "text,seconds",
    [("600", 600.0), (" 2.5 ", 2.5), ("PT10M", 600.0), (30, 30.0)],
)
def test_parse_duration(text, seconds):
    assert parse_duration(text) == seconds


def test_parse_duration_logs_errors(caplog):
    with pytest.raises(ValueError):
        parse_duration("soon")

    assert "parse_duration error" in caplog.text


@pytest.mark.parametrize(
    "seconds,text",
    [(0.0421, "0.042s"), (59.9, "59.900s"), (60, "0:01:00"), (3730, "1:02:10")],
)
def test_format_seconds(seconds, text):
    assert format_seconds(seconds) == text
