import json

import pytest

from hyra.corpus import all_benchmarks, build, build_bouncing_ball
from hyra.errors import SchemaViolation
from hyra.interchange import bundle_to_dict, read_json, write_json


@pytest.mark.parametrize("bench", all_benchmarks(), ids=lambda b: b.value)
def test_write_read_identity_on_canonical_text(bench):
    bundle = build(bench)
    text = write_json(bundle)
    again = read_json(text)
    assert again == bundle
    assert write_json(again) == text


def test_ball_json_lists_the_restitution_constant():
    data = bundle_to_dict(build_bouncing_ball())
    assert data["variables"]["constants"] == {"c": 0.75}
    # the symbolic reset overlay is preserved
    reset = data["transitions"][0]["reset"]
    assert reset["matrix_terms"]["c"][1][1] == -1.0


def test_corrupted_field_type_is_a_schema_violation():
    data = bundle_to_dict(build_bouncing_ball())
    data["settings"]["horizon"] = "forty"
    with pytest.raises(SchemaViolation):
        read_json(json.dumps(data))


def test_missing_section_is_a_schema_violation():
    data = bundle_to_dict(build_bouncing_ball())
    del data["locations"]
    with pytest.raises(SchemaViolation):
        read_json(json.dumps(data))


def test_not_json_at_all():
    with pytest.raises(SchemaViolation):
        read_json("also not json {")


def test_inconsistent_dimensions_rejected_after_schema():
    data = bundle_to_dict(build_bouncing_ball())
    data["locations"][0]["flow"]["c"] = [0.0]  # wrong length
    with pytest.raises(SchemaViolation):
        read_json(json.dumps(data))
