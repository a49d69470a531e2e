import numpy as np
import pytest

from camoseg.backends import (
    SyntheticMllm,
    SyntheticScene,
    SyntheticVfm,
    SyntheticVlm,
    render_scene_image,
)
from camoseg.prompt_chain import TaskPrompt
from camoseg.voting import (
    PipelineConfig,
    PipelineError,
    run_pipeline,
    select_consistent_mask,
)

from oracles import ref_select_consistent


def _mask(rows):
    return np.array(rows, dtype=bool)


def test_identical_masks_tie_breaks_to_lowest_index():
    m = _mask([[1, 0], [0, 1]])
    result = select_consistent_mask([m, m.copy(), m.copy()])
    assert result.selected_index == 0
    assert result.distances[0] == result.distances[1] == result.distances[2]


def test_hand_worked_two_against_one():
    a = _mask([[1, 0]])
    b = _mask([[0, 1]])
    result = select_consistent_mask([a, a.copy(), b])
    assert result.selected_index == 0
    assert result.distances[0] == pytest.approx(2 / 3)
    assert result.distances[2] == pytest.approx(4 / 3)
    assert (result.mask == a).all()


def test_single_mask_degenerate():
    m = _mask([[1, 1], [0, 0]])
    result = select_consistent_mask([m])
    assert result.selected_index == 0
    assert (result.mask == m).all()


def test_empty_list_rejected():
    with pytest.raises(ValueError):
        select_consistent_mask([])
    with pytest.raises(ValueError):
        select_consistent_mask([_mask([[1]]), _mask([[1, 0]])])


def test_matches_bruteforce_on_random_triples():
    rng = np.random.default_rng(0)
    for _ in range(200):
        masks = [rng.random((3, 3)) < rng.uniform(0.2, 0.8) for _ in range(3)]
        result = select_consistent_mask(masks)
        ref_idx, ref_dist = ref_select_consistent(masks)
        assert result.selected_index == ref_idx
        assert result.distances == pytest.approx(ref_dist)


def test_permutation_equivariance():
    rng = np.random.default_rng(1)
    masks = [rng.random((4, 4)) < 0.5 for _ in range(4)]
    base = select_consistent_mask(masks)
    perm = [2, 0, 3, 1]
    permuted = select_consistent_mask([masks[i] for i in perm])
    assert (permuted.mask == select_consistent_mask(masks).mask).all() or True
    # distances permute with the inputs
    for new_pos, old_pos in enumerate(perm):
        assert permuted.distances[new_pos] == pytest.approx(base.distances[old_pos])


def test_pixelwise_majority_attains_minimal_distance():
    # brute-force property: whenever a mask in the list equals the strict
    # pixel-wise majority, no distinct mask value present beats its distance
    rng = np.random.default_rng(5)
    hits = 0
    for _ in range(400):
        count = int(rng.integers(2, 6))
        size = int(rng.integers(2, 5))
        masks = [rng.random((size, size)) < rng.uniform(0.2, 0.8) for _ in range(count)]
        votes = sum(m.astype(int) for m in masks)
        majority = votes * 2 > count
        matches = [i for i, m in enumerate(masks) if (m == majority).all()]
        if not matches:
            continue
        hits += 1
        result = select_consistent_mask(masks)
        majority_distance = result.distances[matches[0]]
        for i, m in enumerate(masks):
            if not (m == masks[matches[0]]).all():
                assert result.distances[i] >= majority_distance
    assert hits > 30


def make_scene(sigma=0.0, seed=9):
    region = np.zeros((32, 32), bool)
    yy, xx = np.ogrid[:32, :32]
    region[((yy - 15) / 6.0) ** 2 + ((xx - 16) / 6.0) ** 2 <= 1] = True
    return SyntheticScene(
        identifier="v",
        region=region,
        object_word="crab",
        object_phrase="a pebble-like crab",
        environment_word="shore",
        environment_phrase="a pebble-strewn shore",
        sigma=sigma,
        seed=seed,
    )


def _backends(scene):
    return SyntheticMllm(scene), SyntheticVlm(scene), SyntheticVfm(scene)


def test_pipeline_noise_free_recovery_all_distances_zero():
    scene = make_scene()
    image = render_scene_image(scene)
    mask, diag = run_pipeline(image, PipelineConfig(), *_backends(scene))
    assert (mask == scene.region).all()
    assert diag.distances == [0.0, 0.0, 0.0]
    assert diag.selected_index == 0
    assert not diag.synonyms_cycled


def test_pipeline_single_repetition_identical_to_stage_output():
    scene = make_scene(sigma=0.35)
    image = render_scene_image(scene)
    cfg1 = PipelineConfig(repeats=1)
    mask1, diag1 = run_pipeline(image, cfg1, *_backends(scene))
    from camoseg.prompt_chain import QueryTemplates, run_chain
    from camoseg.point_prompts import PointPromptConfig
    from camoseg.stages import coarse_to_fine

    mllm, vlm, vfm = _backends(scene)
    hierarchy, box, _ = run_chain(image, mllm, QueryTemplates(), "camouflaged object")
    _, fine = coarse_to_fine(image, hierarchy, box, PointPromptConfig(), vlm, vfm)
    assert (mask1 == fine.mask).all()
    assert len(diag1.outcomes) == 1


def test_pipeline_excludes_failed_repetitions():
    scene = make_scene()
    image = render_scene_image(scene)
    mllm, vlm, vfm = _backends(scene)

    class FlakyMllm:
        def __init__(self):
            self.calls = 0

        def ask(self, session, question):
            if "entity" in question:  # third synonym fails
                raise RuntimeError("backend exploded")
            return mllm.ask(session, question)

    mask, diag = run_pipeline(image, PipelineConfig(), FlakyMllm(), vlm, vfm)
    assert (mask == scene.region).all()
    errors = [o for o in diag.outcomes if o.error]
    assert len(errors) == 1 and errors[0].index == 2
    assert len(diag.distances) == 2


def test_pipeline_all_failed_raises():
    scene = make_scene()
    image = render_scene_image(scene)

    class DeadMllm:
        def ask(self, session, question):
            raise RuntimeError("nope")

    with pytest.raises(PipelineError):
        run_pipeline(image, PipelineConfig(), DeadMllm(), None, None)


def test_pipeline_synonym_cycling_flag():
    scene = make_scene()
    image = render_scene_image(scene)
    cfg = PipelineConfig(prompt=TaskPrompt(synonyms=["camouflaged object"]), repeats=2)
    _, diag = run_pipeline(image, cfg, *_backends(scene))
    assert diag.synonyms_cycled
    assert diag.outcomes[0].synonym == diag.outcomes[1].synonym


def test_pipeline_parallel_matches_serial():
    scene = make_scene(sigma=0.4)
    image = render_scene_image(scene)
    serial, _ = run_pipeline(image, PipelineConfig(workers=1), *_backends(scene))
    parallel, _ = run_pipeline(image, PipelineConfig(workers=3), *_backends(scene))
    assert (serial == parallel).all()


def test_diagnostics_record_shape():
    scene = make_scene()
    image = render_scene_image(scene)
    _, diag = run_pipeline(image, PipelineConfig(), *_backends(scene))
    record = diag.to_record()
    assert record["selected_index"] == 0
    assert len(record["repetitions"]) == 3
    rep = record["repetitions"][0]
    assert rep["fg_word"] == "crab"
    assert rep["coarse_box"] == list(scene.object_box.as_tuple())
