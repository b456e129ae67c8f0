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

# Decision round and optimizer settings
SIMULATION_CONFIG = {
    'slot_length': 300.0,             # Decision round length tau in seconds
    'plans_per_agent': 20,            # Candidate plans generated per fog agent
    'default_lambda': 0.5,            # Weight of the local cost in the combined cost
    'lambda_grid': [round(0.05 * n, 2) for n in range(21)],  # {0.05n | 0 <= 0.05n <= 1}
    'branching': 2,                   # Children per agent in the tree overlay
    'max_iterations': 40,             # Optimizer iteration limit
    'objective': 'min-var',           # Global objective: 'min-var' or 'incentive'
    'hop_radius': None,               # Candidate fog hosts within this many hops (None = whole fog tier)
    'diversification_depth': 4,       # K: plan k chooses among the top (k mod K + 1) hosts
    'exhaustive_limit': 4096,         # Enumerate all assignments when the space is at most this large
    'utilization_cap': 0.9,           # Maximum CPU utilization of a fog node
    'container_startup_delay': 0.05,  # Seconds added to fog deployments in round 0
    'fallback_ap': None,              # AP for vehicles without coverage (None = lowest AP id)
    'rounds_per_profile': 3,          # 5-minute rounds per 15-minute IoT profile
    'window_profiles': 12,            # IoT profiles per experiment window
    'exp2_max_windows': None,         # Limit on sliding windows (None = all)
    'exp3_ratios': [0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2],
    'exp3_active_counts': [5, 10, 15, 20],  # Full-scale grid is range(10, 111, 5)
    'exp3_repetitions': 10,           # Seeded node samples per grid cell
    'exp3_rounds': 1,                 # Rounds evaluated per grid cell
    'seeds': [1],                     # Seeds used when none is given on the command line
    'strategies': ['mera', 'baseline', 'greedy'],
    'regimes': ['default', 'optimized'],
}

# Prices and emission factors
PRICE_CONFIG = {
    'cpu_price_edge': 0.6e-6,         # USD per million instructions, fog behind edge routers and cloud
    'cpu_price_core': 0.2e-6,         # USD per million instructions, fog behind core routers
    'ram_price_mb_ms': 21e-10 / 128,  # USD per MB per ms
    'storage_price_gb_month': (0.021, 0.023),  # USD per GB per month, uniform range
    'nonrenewable_price_kwh': 0.905,  # USD per kWh
    'renewable_price_mwh_eur': 294.0, # EUR per MWh
    'carbon_price_tonne_eur': 17.27,  # EUR per tonne CO2
    'emission_rate_g_kwh': 380.0,     # g CO2 eq per kWh
    'eur_to_usd': 1.08,               # Fixed conversion rate for EUR inputs
    'instance_price_hour': 0.0058,    # USD per hour of the reference instance (SLA credit base)
    'sla_credit_schedule': [          # (qos upper bound, credit percentage)
        (0.95, 1.00),
        (0.99, 0.30),
        (1.00, 0.10),
    ],
}

# ICT substrate
NETWORK_CONFIG = {
    'lte_uplink_gbps': 0.012,
    'lte_downlink_gbps': 0.072,
    'edge_uplink_gbps': 1.0,
    'edge_downlink_gbps': 10.0,
    'core_uplink_gbps': 10.0,
    'core_downlink_gbps': 100.0,
    'cloud_gbps': 100.0,
    'unit_cost_gb': {                 # USD per GB by link tier, uniform ranges
        'intra-edge': (0.01, 0.03),
        'core': (0.03, 0.06),
        'cloud': (0.06, 0.09),
    },
    'hop_delay_ms': {                 # Propagation delay per link by tier, uniform ranges
        'intra-edge': (0.5, 2.0),
        'core': (1.0, 3.0),
    },
    'cloud_delay_ms': (15.0, 35.0),   # Propagation delay towards the cloud
    'access_delay_ms': 1.0,           # Vehicle to access point propagation delay
    'coverage_radius_m': 700.0,       # Access point coverage radius
    'routers': {                      # Energy per bit (nJ) for upload and download, idle and max power (W)
        'base-station': {'upload_nj_bit': 12400.0, 'download_nj_bit': 82820.0, 'idle_power': 333.0, 'max_power': 528.0},
        'edge-router': {'upload_nj_bit': 37.0, 'download_nj_bit': 37.0, 'idle_power': 4095.0, 'max_power': 4550.0},
        'core-router': {'upload_nj_bit': 12.6, 'download_nj_bit': 12.6, 'idle_power': 11070.0, 'max_power': 12300.0},
        'switch': {'upload_nj_bit': 31.7, 'download_nj_bit': 31.7, 'idle_power': 1589.0, 'max_power': 1766.0},
    },
    'cloud_pue': 1.2,
    'cloud_renewable_ratio': 0.85,
    'renewable_beta': (0.6, 0.4),     # Beta parameters of the shared AP/fog renewable ratio
}

# Desk-scale synthetic scenario
SYNTH_CONFIG = {
    'fog_nodes': 20,
    'access_points': 15,
    'core_routers': 4,
    'vehicles': 200,
    'rounds': 36,
    'profiles': 16,                   # 15-minute IoT profiles
    'area_m': (2100.0, 3300.0),       # Test area width and height
    'max_speed_mps': 120.0 / 3.6,
    'fog_capacity_factor': 2.5,       # Aggregate fog CPU over mean round demand
    'fog_ram_factor': 25.0,           # Aggregate fog RAM over mean present RAM demand
    'base_rate_rps': (50.0, 150.0),   # Per-vehicle request rate before profile scaling
    'cpu_demand_mi': (50.0, 200.0),
    'ram_demand_mb': (2.0, 400.0),
    'storage_demand_mb': (50.0, 500.0),
    'request_kb': (10.0, 26.0),
    'response_bytes': (10.0, 20.0),
    'deadline_s': 0.03,               # Desk-scale deadline
    'qos_levels': [0.9, 0.95, 0.99],
    'machines': [                     # memory GB, GFLOPS, storage GB, cores, idle W, max W
        {'model': 'xeon-gold-6140', 'memory_gb': 192, 'gflops': 864.0, 'storage_gb': 120, 'cores': 36, 'idle_power': 52.4, 'max_power': 343.0},
        {'model': 'xeon-gold-6136', 'memory_gb': 196, 'gflops': 806.4, 'storage_gb': 292, 'cores': 24, 'idle_power': 131.0, 'max_power': 432.0},
        {'model': 'xeon-platinum-8180', 'memory_gb': 192, 'gflops': 1523.2, 'storage_gb': 480, 'cores': 56, 'idle_power': 48.0, 'max_power': 385.0},
        {'model': 'xeon-platinum-8280', 'memory_gb': 192, 'gflops': 1612.8, 'storage_gb': 240, 'cores': 56, 'idle_power': 64.2, 'max_power': 435.0},
        {'model': 'xeon-platinum-8380hl', 'memory_gb': 384, 'gflops': 1792.0, 'storage_gb': 480, 'cores': 112, 'idle_power': 44.6, 'max_power': 502.0},
    ],
    'cloud_machine': {'model': 'cloud-xeon-e5-2680', 'memory_gb': 768, 'mips': 112000.0, 'storage_gb': 500, 'cores': 10, 'idle_power': 57.0, 'max_power': 115.0},
    'regimes': {                      # Spatial skew (Dirichlet concentration) and presence factor
        'default': {'concentration': 0.3, 'presence': (0.6, 1.0)},
        'optimized': {'concentration': 5.0, 'presence': (0.3, 0.6)},
    },
}

# Storage settings
STORAGE_CONFIG = {
    'base_path': './data',            # Base path for data storage
    'scenario_dir': 'scenario',       # Directory for generated scenarios
    'results_dir': 'results',         # Directory for experiment output
    'log_dir': 'logs',                # Directory for log files
    'timestamp_format': '%Y%m%d_%H%M%S',  # Timestamp format
    'topology_file': 'topology.json',
    'services_file': 'services.csv',
    'profiles_file': 'iot_profiles.csv',
    'mobility_file': 'mobility_{regime}.csv',
    'manifest_file': 'manifest.json',
}

# Application settings
APP_CONFIG = {
    'log_level': 'INFO',              # Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    'log_to_file': True,              # Also write logs under base_path/logs
    'version': '1.0.0',               # Code version written to run manifests
    'schema_version': 1,              # Topology document schema version
    'workers_env': 'MERA_WORKERS',    # Environment variable holding the worker count
    'float_format': '%.10g',          # Float format of metric CSVs
}
