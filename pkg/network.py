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

import math
import logging
from dataclasses import dataclass, replace
from threading import Lock
from typing import Tuple

import networkx as nx

from model import UnreachableHostError


@dataclass(frozen=True)
class PathMetrics:
    """Aggregated properties of a routed path"""
    path: Tuple[str, ...]
    delay: float            # sum of per-hop propagation delays, s
    uplink_rate: float      # bottleneck, bits/s
    downlink_rate: float    # bottleneck, bits/s
    unit_cost: float        # sum of per-link unit costs, currency/byte

    @property
    def hops(self):
        return max(0, len(self.path) - 1)


def zero_path(entity_id):
    return PathMetrics(path=(entity_id,), delay=0.0, uplink_rate=math.inf, downlink_rate=math.inf, unit_cost=0.0)


class Topology:
    """ICT substrate: nodes, access points, routers and the links between them

    Paths are minimum-hop; among equal-hop paths the lexicographically smallest
    id sequence wins.
    """

    def __init__(self, nodes, access_points, links, routers, path_cache=None):
        self.logger = logging.getLogger('Topology')
        self.nodes = tuple(sorted(nodes, key=lambda n: n.id))
        self.access_points = tuple(sorted(access_points, key=lambda a: a.id))
        self.links = tuple(links)
        self.routers = tuple(sorted(routers, key=lambda r: r.id))

        self.nodes_by_id = {node.id: node for node in self.nodes}
        self.aps_by_id = {ap.id: ap for ap in self.access_points}
        self.routers_by_id = {router.id: router for router in self.routers}

        self.graph = nx.Graph()
        self.graph.add_nodes_from(self.nodes_by_id)
        self.graph.add_nodes_from(self.aps_by_id)
        self.graph.add_nodes_from(self.routers_by_id)
        for link in self.links:
            self.graph.add_edge(link.source, link.target, link=link)

        # Paths only depend on links, so derived topologies share the cache.
        self._path_cache = path_cache if path_cache is not None else {}
        self._distance_cache = {}
        self._lock = Lock()

    @property
    def node_ids(self):
        """Fixed node order of utilization vectors"""
        return [node.id for node in self.nodes]

    @property
    def fog_nodes(self):
        return [node for node in self.nodes if not node.is_cloud]

    @property
    def cloud_nodes(self):
        return [node for node in self.nodes if node.is_cloud]

    @property
    def cloud(self):
        clouds = self.cloud_nodes
        return clouds[0] if clouds else None

    def with_nodes(self, replacements):
        """Copy of the topology with some nodes replaced (same links)"""
        nodes = [replacements.get(node.id, node) for node in self.nodes]
        return Topology(nodes, self.access_points, self.links, self.routers, path_cache=self._path_cache)

    def with_active(self, active_ids):
        replacements = {node.id: replace(node, active=node.id in active_ids)
                        for node in self.nodes if not node.is_cloud}
        return self.with_nodes(replacements)

    def router_of(self, node_id):
        node = self.nodes_by_id[node_id]
        if node.attached_router is None:
            return None
        return self.routers_by_id.get(node.attached_router)

    def _distances_to(self, target):
        with self._lock:
            distances = self._distance_cache.get(target)
        if distances is None:
            distances = nx.single_source_shortest_path_length(self.graph, target)
            with self._lock:
                self._distance_cache[target] = distances
        return distances

    def hop_distance(self, source, target):
        distances = self._distances_to(target)
        if source not in distances:
            return None
        return distances[source]

    def path(self, source, target):
        """Metrics of the routed path between two entities"""
        if source == target:
            return zero_path(source)
        ap = self.aps_by_id.get(source)
        if ap is not None and ap.colocated_fog == target:
            return zero_path(target)

        key = (source, target)
        with self._lock:
            cached = self._path_cache.get(key)
        if cached is not None:
            return cached

        distances = self._distances_to(target)
        if source not in distances:
            raise UnreachableHostError(f"No route from {source} to {target}")

        hops = [source]
        current = source
        while current != target:
            remaining = distances[current]
            current = min(neighbor for neighbor in self.graph.neighbors(current)
                          if distances.get(neighbor) == remaining - 1)
            hops.append(current)

        links = [self.graph.edges[u, v]['link'] for u, v in zip(hops, hops[1:])]
        metrics = PathMetrics(
            path=tuple(hops),
            delay=sum(link.delay for link in links),
            uplink_rate=min(link.uplink_rate for link in links),
            downlink_rate=min(link.downlink_rate for link in links),
            unit_cost=sum(link.unit_cost for link in links),
        )
        with self._lock:
            self._path_cache[key] = metrics
        return metrics

    def reachable(self, source, target):
        try:
            self.path(source, target)
        except UnreachableHostError:
            return False
        return True

    def deployment_unit_cost(self, node_id):
        """Fog-to-cloud path unit cost; 0 for cloud nodes"""
        node = self.nodes_by_id[node_id]
        cloud = self.cloud
        if node.is_cloud or cloud is None:
            return 0.0
        return self.path(node_id, cloud.id).unit_cost

    def nearest_fog(self, ap_id, active_ids=None):
        """Closest active fog node to an AP by hops, lowest id on ties"""
        ap = self.aps_by_id[ap_id]
        candidates = [node for node in self.fog_nodes
                      if node.active and (active_ids is None or node.id in active_ids)]
        if ap.colocated_fog is not None and any(node.id == ap.colocated_fog for node in candidates):
            return ap.colocated_fog
        best = None
        for node in candidates:
            hops = self.hop_distance(ap_id, node.id)
            if hops is None:
                continue
            if best is None or (hops, node.id) < best:
                best = (hops, node.id)
        return best[1] if best else None
