import pytest
import torch

from degnet.features import FeatureExtractor
from degnet.models import (
    FeatureDiscriminator,
    Generator,
    ImageDiscriminator,
    SubPixelUp,
    TextureNetConfig,
    UpNetConfig,
    upnet_forward,
)
from degnet.train import TrainConfig, save_checkpoint, load_generator


def small_gen(cfg_cls=UpNetConfig, seed=0):
    torch.manual_seed(seed)
    return Generator(cfg_cls(feature_channels=8))


def test_output_is_4x_input_shape():
    g = small_gen()
    out = upnet_forward(g, torch.rand(1, 3, 32, 48))
    assert tuple(out.shape) == (1, 3, 128, 192)
    out = upnet_forward(g, torch.rand(2, 3, 16, 16))
    assert tuple(out.shape) == (2, 3, 64, 64)


def test_too_small_input_rejected():
    g = small_gen()
    with pytest.raises(ValueError):
        upnet_forward(g, torch.rand(1, 3, 8, 8))
    with pytest.raises(ValueError):
        upnet_forward(g, torch.rand(1, 1, 32, 32))


def test_untrained_forward_deterministic_given_seed():
    x = torch.rand(1, 3, 16, 16)
    a = small_gen(seed=7)(x)
    b = small_gen(seed=7)(x)
    assert torch.equal(a, b)


def test_default_config_matches_contract():
    cfg = UpNetConfig()
    assert cfg.head_kernel == 9
    assert cfg.res_blocks == 9
    assert cfg.feature_channels == 64
    assert cfg.upsample_stages == 2
    assert not cfg.skip_adapters
    g = Generator(UpNetConfig(feature_channels=8))
    assert len(g.blocks) == 9
    assert not any(isinstance(m, torch.nn.BatchNorm2d) for m in g.modules())


def test_texture_variant_adds_skip_adapters():
    up = Generator(UpNetConfig(feature_channels=8))
    tex = Generator(TextureNetConfig(feature_channels=8))
    assert up.adapters is None
    assert len(tex.adapters) == 10  # head skip + one per residual block
    # Same backbone otherwise.
    assert len(up.blocks) == len(tex.blocks)
    assert up.head.kernel_size == tex.head.kernel_size == (9, 9)


def test_subpixel_stage_is_pure_rearrangement():
    shuffle = torch.nn.PixelShuffle(2)
    x = torch.rand(2, 12, 5, 7)
    y = shuffle(x)
    assert tuple(y.shape) == (2, 3, 10, 14)
    assert torch.allclose(y.sum(), x.sum())  # bijection on samples
    assert torch.equal(y.flatten().sort().values, x.flatten().sort().values)


def test_subpixel_module_doubles_resolution():
    up = SubPixelUp(8)
    y = up(torch.rand(1, 8, 6, 9))
    assert tuple(y.shape) == (1, 8, 12, 18)


def test_discriminator_outputs_are_probabilities():
    torch.manual_seed(2)
    with torch.no_grad():
        d = ImageDiscriminator(base_channels=8)
        p = d(torch.rand(4, 3, 32, 32))
        assert p.shape == (4,)
        assert float(p.min()) > 0.0 and float(p.max()) < 1.0

        phi = FeatureExtractor(width_scale=0.25, seed=1, pretrained=False)
        df = FeatureDiscriminator(feature_channels=phi.out_channels, hidden=16)
        q = df(phi(torch.rand(3, 3, 32, 32)))
        assert q.shape == (3,)
        assert float(q.min()) > 0.0 and float(q.max()) < 1.0


def test_checkpoint_roundtrip_identical_outputs(tmp_path):
    g = small_gen(seed=5)
    x = torch.rand(1, 3, 16, 16)
    before = upnet_forward(g, x)
    save_checkpoint(
        {"model": g.state_dict(), "config": vars(TrainConfig(feature_channels=8)), "kind": "upnet"},
        tmp_path / "g.pt",
    )
    restored = load_generator(tmp_path / "g.pt")
    after = upnet_forward(restored, x)
    assert torch.equal(before, after)


def test_extractor_requires_no_grad():
    phi = FeatureExtractor(width_scale=0.25, seed=1, pretrained=False)
    assert all(not p.requires_grad for p in phi.parameters())
    phi.train()  # must stay in eval mode
    assert not phi.training
