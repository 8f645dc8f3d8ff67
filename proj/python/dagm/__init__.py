# Copyright 2026 The dagm Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Dialogue-act controlled dialogue generation."""

import json

from ._dagm import (
    Chat,
    Config,
    ConfigError,
    Error,
    StateError,
    acts,
    bleu,
    distinct_n,
    gen_corpus,
    out_of_context_ratio,
    tag,
    train_classifier,
    train_matcher,
    train_rl,
    train_sl,
)
from ._dagm import evaluate_json as _evaluate_json
from ._dagm import simulate as _simulate

__all__ = [
    "Chat",
    "Config",
    "ConfigError",
    "Error",
    "StateError",
    "acts",
    "bleu",
    "distinct_n",
    "evaluate",
    "gen_corpus",
    "out_of_context_ratio",
    "run_pipeline",
    "simulate",
    "tag",
    "train_classifier",
    "train_matcher",
    "train_rl",
    "train_sl",
]


def simulate(config, work, model="rl", episodes=None):
    """Self-play dialogues; returns per-episode lengths and the engagement report."""
    out = _simulate(config, str(work), model, episodes)
    return {"lengths": out["lengths"], "engagement": json.loads(out["engagement_json"])}


def evaluate(config, work, model="rl"):
    """Metric report and per-act conditioning report as dictionaries."""
    metrics, acts_report = _evaluate_json(config, str(work), model)
    return {"metrics": json.loads(metrics), "acts": json.loads(acts_report)}


def run_pipeline(config, work, episodes=None):
    """Every stage in order; returns the RL model's evaluation."""
    work = str(work)
    gen_corpus(config, work)
    train_classifier(config, work)
    tag(config, work)
    train_sl(config, work)
    train_matcher(config, work)
    train_rl(config, work)
    result = None
    for model in ("sl", "rl"):
        simulate(config, work, model, episodes)
        result = evaluate(config, work, model)
    return result
