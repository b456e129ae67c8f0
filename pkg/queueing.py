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

"""Erlang-C waiting times, end-to-end service delay and deadline violation fractions.

Sizes are bytes and rates bits/s, so a transmission takes 8 * size / rate seconds.
"""

import logging
import math
from dataclasses import dataclass

from model import UnstableQueueError, UnreachableHostError

logger = logging.getLogger(__name__)

BITS_PER_BYTE = 8.0
_RESCALE = 1e250


@dataclass(frozen=True)
class QueueAssessment:
    utilization: float
    wait_prob: float
    empty_prob: float
    waiting_time: float
    stable: bool


def erlang_c(n, rho):
    """Empty-system and wait probabilities (P0, PQ) of an M/M/n queue at per-unit load rho

    Terms (n*rho)^c / c! are built by recurrence and rescaled when they grow
    large, so n may reach several hundred.
    """
    if n < 1:
        raise ValueError(f"unit count must be at least 1, got {n}")
    if rho < 0:
        raise ValueError(f"negative load {rho}")
    if rho >= 1:
        raise UnstableQueueError(f"unstable queue: rho={rho} with {n} units")

    offered = n * rho
    term = 1.0
    partial = 0.0
    log_scale = 0.0
    for c in range(n):
        partial += term
        term = term * offered / (c + 1)
        if term > _RESCALE or partial > _RESCALE:
            term /= _RESCALE
            partial /= _RESCALE
            log_scale += math.log(_RESCALE)
    tail = term / (1.0 - rho)
    total = partial + tail

    wait_prob = tail / total
    empty_prob = math.exp(-(math.log(total) + log_scale)) if total > 0 else 0.0
    return empty_prob, wait_prob


def share_of_host(cpu_demand, host_work):
    """Fraction of the host's processing units a service obtains"""
    if host_work <= 0:
        return 1.0
    return cpu_demand / host_work


def assess(node, share, arrival):
    """Queue state of one service on a node; never raises on instability"""
    if not node.bounded:
        return QueueAssessment(utilization=0.0, wait_prob=0.0, empty_prob=1.0,
                               waiting_time=1.0 / node.unit_rate, stable=True)
    capacity = node.cpu_capacity * share
    if capacity <= 0 or arrival >= capacity:
        return QueueAssessment(utilization=arrival / capacity if capacity > 0 else math.inf,
                               wait_prob=1.0, empty_prob=0.0, waiting_time=math.inf, stable=False)
    rho = arrival / capacity
    empty_prob, wait_prob = erlang_c(node.unit_count, rho)
    waiting = wait_prob / (capacity - arrival) + 1.0 / (node.unit_rate * share)
    return QueueAssessment(utilization=rho, wait_prob=wait_prob, empty_prob=empty_prob,
                           waiting_time=waiting, stable=True)


def waiting_time(node, share, arrival):
    """Mean waiting time (queueing plus processing) on the node's share of units

    Unbounded hosts serve each service on a dedicated unit.
    """
    if not 0 < share <= 1:
        raise ValueError(f"share {share} outside (0, 1]")
    assessment = assess(node, share, arrival)
    if not assessment.stable:
        raise UnstableQueueError(f"arrival {arrival} MI/s reaches capacity "
                                 f"{node.cpu_capacity * share} MI/s on {node.id}")
    return assessment.waiting_time


def communication_delays(service, host_id, coverage, topology):
    """Per-AP communication delay, as if the vehicle stayed with that AP all round

    APs with no path to the host get an infinite delay, so their coverage mass
    counts as violating. Raises only when no covering AP reaches the host.
    """
    delays = {}
    failures = 0
    for ap_id, probability in coverage.probabilities.items():
        if probability <= 0:
            continue
        ap = topology.aps_by_id[ap_id]
        try:
            path = topology.path(ap_id, host_id)
        except UnreachableHostError:
            failures += 1
            delays[ap_id] = math.inf
            continue
        radio = (BITS_PER_BYTE * service.request_size / ap.uplink_rate
                 + BITS_PER_BYTE * service.response_size / ap.downlink_rate)
        backhaul = (BITS_PER_BYTE * service.request_size / path.uplink_rate
                    + BITS_PER_BYTE * service.response_size / path.downlink_rate)
        delays[ap_id] = 2.0 * (ap.access_delay + path.delay) + radio + backhaul
    if failures and failures == len(delays):
        raise UnreachableHostError(f"No covering AP of {service.vehicle} reaches {host_id}")
    if failures:
        logger.debug(f"{failures} covering AP(s) of {service.vehicle} cannot reach {host_id}")
    return delays


def service_delay(service, host_id, coverage, topology, waiting):
    """Expected end-to-end delay: waiting time plus probability-weighted communication"""
    delays = communication_delays(service, host_id, coverage, topology)
    return waiting + sum(coverage.probabilities[ap_id] * delay for ap_id, delay in delays.items())


def violation_fraction(service, host_id, coverage, topology, waiting, extra_delay=0.0):
    """Probability-weighted share of traffic whose per-AP delay reaches the deadline"""
    delays = communication_delays(service, host_id, coverage, topology)
    fraction = 0.0
    for ap_id, delay in delays.items():
        if waiting + extra_delay + delay >= service.deadline:
            fraction += coverage.probabilities[ap_id]
    return min(1.0, fraction)


def deadline_reachable(service, node, coverage, topology):
    """Whether some covering AP can meet the deadline with the host otherwise idle"""
    try:
        delays = communication_delays(service, node.id, coverage, topology)
    except UnreachableHostError:
        return False
    if not delays:
        return True
    best_wait = 1.0 / node.unit_rate
    return any(best_wait + delay < service.deadline for delay in delays.values())


def idle_violation_fraction(service, node, coverage, topology):
    """Violation fraction on a running host that is otherwise idle"""
    try:
        return violation_fraction(service, node.id, coverage, topology, 1.0 / node.unit_rate)
    except UnreachableHostError:
        return 1.0
