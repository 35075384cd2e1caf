"""Shared builders for test fixtures."""

from __future__ import annotations

import datetime as dt

import pytest

from narralab.corpus import (
    EditorialStage,
    SpeakerRole,
    SpeakerSegment,
    TranscriptVersion,
)
from narralab.targets import EarningsEvent, ForecastRecord


def make_segments(*pairs):
    return tuple(
        SpeakerSegment(speaker_role=SpeakerRole.parse(role), order_index=i, text=text)
        for i, (role, text) in enumerate(pairs)
    )


def make_version(stage="Audited", timestamp="2022-01-01T00:00:00Z", segments=None,
                 event_id="E1", firm_id="F1"):
    if segments is None:
        segments = make_segments(("Management", "hello world"), ("Analyst", "question"))
    return TranscriptVersion(
        event_id=event_id,
        firm_id=firm_id,
        editorial_stage=EditorialStage.parse(stage),
        version_timestamp=timestamp,
        segments=segments,
    )


def make_forecast(analyst_id="A1", eps=2.0, date="2022-01-05", horizon=1,
                  firm_id="F1", factor=1.0, broker_id="B1"):
    return ForecastRecord(
        analyst_id=analyst_id,
        broker_id=broker_id,
        firm_id=firm_id,
        issue_date=dt.date.fromisoformat(date),
        horizon_years=horizon,
        eps_forecast=eps,
        adjustment_factor=factor,
    )


def make_event(firm_id="F1", call_date="2022-01-01", price=100.0, eps_prev=2.0,
               realized=None, factor=1.0):
    if realized is None:
        realized = {}
    return EarningsEvent(
        firm_id=firm_id,
        call_date=dt.date.fromisoformat(call_date),
        realized_eps_prev=eps_prev,
        price_at_call=price,
        realized_eps_future=realized,
        adjustment_factor_at_realization=factor,
    )


@pytest.fixture
def tiny_corpus():
    """Three transcript records in the ingestion schema."""
    return [
        {
            "event_id": "E1",
            "firm_id": "F1",
            "call_date": "2022-01-01",
            "editorial_stage": "Preliminary",
            "version_timestamp": "2022-01-01T01:00:00Z",
            "segments": [
                {"speaker_role": "Management", "order_index": 0, "text": "draft remarks 1"},
                {"speaker_role": "Analyst", "order_index": 1, "text": "q"},
            ],
        },
        {
            "event_id": "E1",
            "firm_id": "F1",
            "call_date": "2022-01-01",
            "editorial_stage": "Audited",
            "version_timestamp": "2022-01-01T00:00:00Z",
            "segments": [
                {"speaker_role": "Operator", "order_index": 0, "text": "welcome"},
                {"speaker_role": "Management", "order_index": 1, "text": "revenue grew 35% in Q4 2022"},
                {"speaker_role": "Analyst", "order_index": 2, "text": "q"},
            ],
        },
        {
            "event_id": "E2",
            "firm_id": "F2",
            "call_date": "2022-02-01",
            "editorial_stage": "Edited",
            "version_timestamp": "2022-02-01T00:00:00Z",
            "segments": [
                {"speaker_role": "Management", "order_index": 0, "text": "steady quarter no figures"},
                {"speaker_role": "Analyst", "order_index": 1, "text": "q"},
            ],
        },
    ]
