#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# Copyright (C) 2025 fogplace contributors
#
# This file is part of fogplace.
#
# fogplace is free software: you can redistribute it
# and/or modify it under the terms of the GNU General Public License
# as published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#

"""Access point connection probabilities and connectivity times from vehicle traces."""

import logging
from dataclasses import dataclass
from typing import Dict, Tuple


@dataclass(frozen=True)
class Segment:
    """Coverage of one access point along the vehicle's path during a round"""
    ap: str
    coverage_length: float     # m
    registration_time: float   # s
    wait_time: float           # s


@dataclass(frozen=True)
class MobilityTrace:
    vehicle: str
    speed: float               # m/s
    segments: Tuple[Segment, ...]
    round_index: int = 0

    def segment_for(self, ap_id):
        return [segment for segment in self.segments if segment.ap == ap_id]


@dataclass(frozen=True)
class Coverage:
    """Normalized per-AP probabilities of one vehicle in one round"""
    vehicle: str
    probabilities: Dict[str, float]
    covered: bool

    @property
    def total(self):
        return sum(self.probabilities.values())

    def dominant_ap(self):
        """AP with the highest probability, lowest id on ties"""
        if not self.probabilities:
            return None
        return min(self.probabilities, key=lambda ap: (-self.probabilities[ap], ap))


def _clamp(value, low=0.0, high=1.0):
    return max(low, min(high, value))


def raw_probability(segment, speed, slot_length):
    """Unclamped share of the round spent usable within the AP's coverage"""
    return (segment.coverage_length / speed - segment.registration_time - segment.wait_time) / slot_length


def connection_probability(trace, ap_id, slot_length):
    """Clamped probability of the vehicle being within coverage of one AP

    A missing segment yields 0.
    """
    if slot_length <= 0:
        raise ValueError(f"slot length must be positive, got {slot_length}")
    segments = trace.segment_for(ap_id)
    if not segments:
        return 0.0
    return _clamp(sum(raw_probability(segment, trace.speed, slot_length) for segment in segments))


def connection_probabilities(trace, slot_length, fallback_ap=None):
    """Per-AP probabilities of a vehicle, scaled down so they sum to at most 1

    A vehicle with zero total probability is attached to ``fallback_ap`` with
    probability 1 and flagged as not covered.
    """
    probabilities = {}
    for ap_id in sorted({segment.ap for segment in trace.segments}):
        value = connection_probability(trace, ap_id, slot_length)
        if value > 0:
            probabilities[ap_id] = value

    total = sum(probabilities.values())
    if total > 1.0:
        probabilities = {ap_id: value / total for ap_id, value in probabilities.items()}
    elif total == 0.0:
        logging.getLogger(__name__).debug(
            f"Vehicle {trace.vehicle} has no coverage in round {trace.round_index}, using fallback AP {fallback_ap}")
        if fallback_ap is None:
            return Coverage(vehicle=trace.vehicle, probabilities={}, covered=False)
        return Coverage(vehicle=trace.vehicle, probabilities={fallback_ap: 1.0}, covered=False)
    return Coverage(vehicle=trace.vehicle, probabilities=probabilities, covered=True)


def connectivity_time(probability, slot_length):
    """Time the vehicle stays connected to an AP within the round"""
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability {probability} outside [0, 1]")
    return probability * slot_length
