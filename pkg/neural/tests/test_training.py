import numpy as np
import pytest
import torch

from degnet.features import FeatureExtractor
from degnet.losses import (
    adv_losses,
    feature_adv_losses,
    level_losses,
    perceptual_loss,
    style_loss,
)
from degnet.models import FeatureDiscriminator, Generator, ImageDiscriminator, TextureNetConfig
from degnet.train import TrainConfig, load_generator, train_texturenet, train_upnet

TOY = TrainConfig(
    batch_size=2, lr_patch=16, learning_rate=1e-3, seed=1, feature_channels=16
)


def test_upnet_toy_convergence_halves_mse(pair_manifest, tmp_path):
    result = train_upnet(pair_manifest, tmp_path / "ckpt", TOY, total_steps=200)
    losses = result["losses"]
    initial = float(np.mean(losses[:5]))
    final = float(np.mean(losses[-5:]))
    print(f"[{'PASS' if final <= 0.5 * initial else 'FAIL'}] upsampler toy convergence "
          f"-- mse {initial:.4f} -> {final:.4f}")
    assert final <= 0.5 * initial


def test_upnet_loss_series_reproducible(pair_manifest, tmp_path):
    a = train_upnet(pair_manifest, tmp_path / "a", TOY, total_steps=30)["losses"]
    b = train_upnet(pair_manifest, tmp_path / "b", TOY, total_steps=30)["losses"]
    assert np.allclose(a, b, rtol=1e-6)


def test_upnet_checkpoint_reload_identical(pair_manifest, tmp_path):
    result = train_upnet(pair_manifest, tmp_path / "ckpt", TOY, total_steps=10)
    reloaded = load_generator(result["checkpoint"])
    x = torch.rand(1, 3, 16, 16)
    trained = result["model"].eval()
    with torch.no_grad():
        assert torch.equal(trained(x), reloaded(x))


def test_texturenet_toy_run_stays_finite(pair_manifest, tmp_path):
    cfg = TrainConfig(
        batch_size=2, lr_patch=8, learning_rate=1e-4, seed=2,
        feature_channels=16, extractor_width=0.25,
    )
    result = train_texturenet(
        pair_manifest, tmp_path / "tex", level=1, cfg=cfg, total_steps=200,
        input_source="bicubic",
    )
    g = np.array(result["history"]["g"])
    d = np.array(result["history"]["d"])
    ok = np.isfinite(g).all() and np.isfinite(d).all()
    print(f"[{'PASS' if ok else 'FAIL'}] texture toy stability -- "
          f"g [{g.min():.3f}, {g.max():.3f}], d [{d.min():.3f}, {d.max():.3f}]")
    assert ok
    assert len(g) == 200


@pytest.fixture(scope="module")
def loss_term_parts():
    """A toy batch with every raw loss term differentiable and nonzero."""
    torch.manual_seed(4)
    phi = FeatureExtractor(width_scale=0.25, seed=4, pretrained=False)
    gen = Generator(TextureNetConfig(feature_channels=8))
    d_img = ImageDiscriminator(base_channels=8)
    d_feat = FeatureDiscriminator(feature_channels=phi.out_channels, hidden=16)
    lr = torch.rand(2, 3, 8, 8)
    hr = torch.rand(2, 3, 32, 32)
    return phi, gen, d_img, d_feat, lr, hr


@pytest.mark.parametrize("level", [1, 2, 3])
def test_gradient_zeroing_confirms_level_subsets(loss_term_parts, level):
    """Exactly the level's loss subset contributes gradient."""
    phi, gen, d_img, d_feat, lr, hr = loss_term_parts
    eps = 1e-6
    fake = gen(lr).clamp(eps, 1 - eps)
    gates = {t: torch.tensor(1.0, requires_grad=True) for t in ("adv", "fadv", "per", "sty")}
    raw = {
        "adv": adv_losses(d_img(hr).clamp(eps, 1 - eps), d_img(fake).clamp(eps, 1 - eps))[0],
        "fadv": feature_adv_losses(
            d_feat(phi(hr)).clamp(eps, 1 - eps), d_feat(phi(fake)).clamp(eps, 1 - eps)
        )[0],
        "per": perceptual_loss(phi, hr, fake),
        "sty": style_loss(phi, hr, fake),
    }
    active = level_losses(level)
    objective = sum(w * gates[t] * raw[t] for t, w in active.items())
    objective.backward(retain_graph=True)
    report = {}
    for term, gate in gates.items():
        grad = float(gate.grad) if gate.grad is not None else 0.0
        report[term] = grad
        if term in active:
            assert abs(grad) > 0.0, f"level {level}: active term {term} got zero gradient"
        else:
            assert grad == 0.0, f"level {level}: inactive term {term} got gradient {grad}"
    print(f"[PASS] level {level} gradient mask -- " +
          ", ".join(f"{t}={v:.2e}" for t, v in report.items()))


def test_generator_receives_gradient_from_feature_adversarial(loss_term_parts):
    phi, gen, d_img, d_feat, lr, hr = loss_term_parts
    gen.zero_grad()
    eps = 1e-6
    fake = gen(lr).clamp(eps, 1 - eps)
    l_fadv = feature_adv_losses(
        d_feat(phi(hr)).clamp(eps, 1 - eps), d_feat(phi(fake)).clamp(eps, 1 - eps)
    )[0]
    l_fadv.backward()
    total = sum(float(p.grad.abs().sum()) for p in gen.parameters() if p.grad is not None)
    assert total > 0.0


def test_extractor_parameters_never_change(pair_manifest, tmp_path):
    cfg = TrainConfig(
        batch_size=2, lr_patch=8, learning_rate=1e-3, seed=5,
        feature_channels=8, extractor_width=0.25,
    )
    phi_before = FeatureExtractor(width_scale=0.25, seed=cfg.seed, pretrained=False)
    snapshot = [p.clone() for p in phi_before.parameters()]
    train_texturenet(
        pair_manifest, tmp_path / "tex", level=3, cfg=cfg, total_steps=5,
        input_source="bicubic",
    )
    phi_after = FeatureExtractor(width_scale=0.25, seed=cfg.seed, pretrained=False)
    for a, b in zip(snapshot, phi_after.parameters()):
        assert torch.equal(a, b)


def test_texturenet_requires_upnet_checkpoint_for_default_source(pair_manifest, tmp_path):
    with pytest.raises(ValueError):
        train_texturenet(pair_manifest, tmp_path / "x", level=1, cfg=TOY, total_steps=1)
