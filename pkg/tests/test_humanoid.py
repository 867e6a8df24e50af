import dataclasses

import numpy as np
import pytest

from posesim.errors import SchemaError
from posesim.humanoid import (
    HumanoidModel,
    box_inertia,
    capsule_inertia,
    default_model,
    load_model_file,
    model_from_dict,
    model_to_dict,
    pack_model,
    save_model_file,
)


def test_default_model_mass_and_joint_counts(model):
    assert abs(model.total_mass - 72.0) < 1e-9
    spherical = sum(1 for l in model.links
                    if l.parent is not None and l.joint.type == "spherical")
    revolute = sum(1 for l in model.links if l.joint.type == "revolute")
    assert (spherical, revolute) == (8, 4)
    assert sum(1 for l in model.links if l.is_foot) == 2


def test_packed_dof_layout(model):
    mp = pack_model(model)
    assert mp.nq == 43
    assert mp.nv == 34  # 6 root + 8*3 + 4
    assert len(mp.contact_body) == 11 * 2 + 2 * 8


def test_inertias_symmetric_positive_definite(model):
    for l in model.links:
        I = np.asarray(l.inertia)
        assert np.allclose(I, I.T)
        assert np.linalg.eigvalsh(I).min() > 0


def test_capsule_inertia_reduces_to_parallel_axis_sanity():
    I, center = capsule_inertia(2.0, (0, 0, -0.2), (0, 0, 0.2), 0.05)
    assert np.allclose(center, 0.0)
    assert I[0, 0] == I[1, 1]
    assert I[2, 2] < I[0, 0]  # long axis has the small moment
    box = box_inertia(2.0, (0.05, 0.05, 0.25))
    assert box[2, 2] < box[0, 0]


def test_model_file_round_trip(model, tmp_path):
    path = str(tmp_path / "model.json")
    save_model_file(model, path)
    loaded = load_model_file(path)
    assert loaded.name == model.name
    assert loaded.num_links == model.num_links
    mp_a, mp_b = pack_model(model), pack_model(loaded)
    for field in ("mass", "com", "inertia", "jpos", "axis", "kp", "kd", "tlim"):
        assert np.allclose(getattr(mp_a, field), getattr(mp_b, field))


def test_model_validation_errors(model):
    links = list(model.links)
    bad_mass = dataclasses.replace(links[1], mass=-1.0)
    with pytest.raises(SchemaError):
        HumanoidModel("bad", tuple([links[0], bad_mass] + links[2:]))
    # dropping a spherical joint breaks the 8+4 requirement
    with pytest.raises(SchemaError):
        HumanoidModel("bad", tuple(links[:-1]))
    doc = model_to_dict(model)
    doc["schema_version"] = 99
    with pytest.raises(SchemaError):
        model_from_dict(doc)


def test_marker_world_zero_layout(model):
    mk = model.marker_world_zero()
    assert np.allclose(mk["pelvis"], 0.0)
    assert mk["head"][2] > mk["neck"][2] > mk["thorax"][2]
    assert mk["right_shoulder"][1] < 0 < mk["left_shoulder"][1]
    assert np.isclose(mk["right_ankle"][2], -0.91)
    # soles sit 0.07 below the ankles
    assert np.isclose(mk["right_heel"][2], -0.98)
