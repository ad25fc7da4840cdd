"""Tests for structured logging setup."""

import json

import pytest

from src.core.logger import get_logger, set_level


@pytest.fixture
def restore_logging():
    yield
    set_level("INFO", "console")


@pytest.mark.unit
def test_json_lines_go_to_stderr(capsys, restore_logging):
    set_level("info", "json")
    get_logger("tests.logging").info("fold_evaluated", fold=2, train=40)
    captured = capsys.readouterr()
    assert captured.out == ""
    event = json.loads(captured.err.strip().splitlines()[-1])
    assert event["event"] == "fold_evaluated"
    assert event["fold"] == 2
    assert event["level"] == "info"
    assert event["logger"] == "acuity.tests.logging"
    assert "timestamp" in event


@pytest.mark.unit
def test_level_filters_events(capsys, restore_logging):
    set_level("WARNING", "json")
    logger = get_logger("acuity.quiet")
    logger.info("hidden")
    logger.warning("shown")
    lines = capsys.readouterr().err.strip().splitlines()
    assert [json.loads(line)["event"] for line in lines] == ["shown"]


@pytest.mark.unit
def test_console_renderer(capsys, restore_logging):
    set_level("DEBUG", "console")
    get_logger("console").debug("preprocessor_fitted", records=3)
    err = capsys.readouterr().err
    assert "preprocessor_fitted" in err
    assert "records=3" in err
