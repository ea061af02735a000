"""Document format: round trips, exactness, and profile transport."""

import json
import random
from fractions import Fraction

import pytest

from securegames.arena import expected_payoffs, validate_arena
from securegames.construct import construct_secure_equilibrium
from securegames.gamefile import (
    DocumentError,
    GameDocument,
    normalize_document,
    parse_document,
    serialize_document,
)
from securegames.verify import verify_profile

from test_eliminate import GOLDEN_REWARDS, golden_chain, random_instance
from test_verify import capped_blocker_game, discounted_specs, reach_flip_game

F = Fraction


MINIMAL = """
{
  "players": [1],
  "states": ["hub"],
  "initial": "hub",
  "controller": {"hub": 1},
  "actions": {"hub": ["stay"]},
  "transitions": [
    {"state": "hub", "action": "stay", "support": [{"target": "hub", "prob": "1"}]}
  ],
  "payoffs": {
    "1": {"family": "discounted", "discount": "1/2", "rewards": []}
  }
}
"""


def test_minimal_document_parses():
    doc = parse_document(MINIMAL)
    assert doc.arena.states == ("hub",)
    assert doc.arena.is_deterministic
    assert doc.specs[1].discount == F(1, 2)
    assert doc.profile is None
    assert validate_arena(doc.arena).ok


def test_exact_thirds_sum_to_one():
    thirds = """
    {
      "players": [1],
      "states": ["hub", "left", "right"],
      "initial": "hub",
      "controller": {"hub": 1, "left": 1, "right": 1},
      "actions": {"hub": ["go"], "left": ["stay"], "right": ["stay"]},
      "transitions": [
        {"state": "hub", "action": "go", "support": [
          {"target": "hub", "prob": "1/3"},
          {"target": "left", "prob": "1/3"},
          {"target": "right", "prob": "1/3"}
        ]},
        {"state": "left", "action": "stay", "support": [{"target": "left", "prob": "1"}]},
        {"state": "right", "action": "stay", "support": [{"target": "right", "prob": "1"}]}
      ],
      "payoffs": {"1": {"family": "discounted", "discount": "1/2", "rewards": [
        {"state": "hub", "action": "go", "value": "-3/4"}
      ]}}
    }
    """
    doc = parse_document(thirds)
    assert sum(doc.arena.transitions[("hub", "go")].values()) == F(1)
    assert doc.specs[1].rewards[("hub", "go")] == F(-3, 4)


def test_syntax_errors_carry_line_and_column():
    with pytest.raises(DocumentError) as err:
        parse_document('{\n  "players": [1,]\n}')
    assert "line 2" in str(err.value) and "column" in str(err.value)


def test_semantic_errors_come_from_validation():
    broken = MINIMAL.replace('"prob": "1"', '"prob": "1/2"')
    with pytest.raises(DocumentError) as err:
        parse_document(broken)
    assert "invalid arena" in str(err.value)

    missing = MINIMAL.replace('"1": {"family"', '"7": {"family"')
    with pytest.raises(DocumentError):
        parse_document(missing)


def test_normalize_is_idempotent_and_canonical():
    text = normalize_document(MINIMAL)
    assert normalize_document(text) == text
    # whitespace and ordering quirks disappear
    assert normalize_document(MINIMAL.replace("\n", " ")) == text


def roundtrip(arena, specs, profile=None) -> GameDocument:
    text = serialize_document(GameDocument(arena=arena, specs=specs, profile=profile))
    assert serialize_document(parse_document(text)) == text
    return parse_document(text)


def test_every_family_round_trips():
    chain = golden_chain()
    doc = roundtrip(chain, discounted_specs(chain, GOLDEN_REWARDS))
    assert doc.arena == chain
    assert doc.specs == discounted_specs(chain, GOLDEN_REWARDS)

    arena, specs = reach_flip_game()
    doc = roundtrip(arena, specs)
    assert doc.arena == arena and doc.specs == specs

    arena, specs = capped_blocker_game()
    doc = roundtrip(arena, specs)
    assert doc.arena == arena and doc.specs == specs


def test_random_games_round_trip():
    for seed in (3100, 3113, 3126):
        rng = random.Random(seed)
        arena, rewards = random_instance(rng, players=(1, 2))
        specs = discounted_specs(arena, rewards)
        doc = roundtrip(arena, specs)
        assert doc.arena == arena and doc.specs == specs


def test_positional_profile_rides_along():
    arena, specs = reach_flip_game()
    profile_doc = """
    {
      "1": {"initial": "m0",
            "choices": {"m0": {"s0": "b", "ga": "loop", "gb": "loop"}},
            "updates": {"m0": {"s0": {"b": {"gb": "m0"}, "a": {"ga": "m0"}},
                               "ga": {"loop": {"ga": "m0"}},
                               "gb": {"loop": {"gb": "m0"}}}}},
      "2": {"initial": "m0", "choices": {}, "updates": {"m0": {
            "s0": {"b": {"gb": "m0"}, "a": {"ga": "m0"}},
            "ga": {"loop": {"ga": "m0"}},
            "gb": {"loop": {"gb": "m0"}}}}}
    }
    """
    raw = json.loads(serialize_document(GameDocument(arena=arena, specs=specs)))
    raw["profile"] = json.loads(profile_doc)
    doc = parse_document(json.dumps(raw))
    assert doc.profile is not None
    report = verify_profile(doc.arena, doc.specs, doc.profile)
    assert report.payoffs == {1: F(1), 2: F(0)}
    assert report.checks["secure"].holds is True


def test_constructed_profiles_survive_the_trip():
    chain = golden_chain()
    specs = discounted_specs(chain, GOLDEN_REWARDS)
    res = construct_secure_equilibrium(chain, specs)
    doc = roundtrip(chain, specs, res.profile)
    assert doc.profile is not None
    assert expected_payoffs(doc.arena, doc.specs, doc.profile) == res.payoffs
    report = verify_profile(doc.arena, doc.specs, doc.profile)
    assert report.checks["nash"].holds is True
    assert report.checks["sum_secure"].holds is True


def test_stochastic_constructed_profile_survives_the_trip():
    rng = random.Random(9911)
    arena, rewards = random_instance(rng, players=(1, 2, 3))
    specs = discounted_specs(arena, rewards)
    res = construct_secure_equilibrium(arena, specs)
    doc = roundtrip(arena, specs, res.profile)
    assert expected_payoffs(doc.arena, doc.specs, doc.profile) == res.payoffs
    report = verify_profile(doc.arena, doc.specs, doc.profile)
    assert report.checks["nash"].holds is True
