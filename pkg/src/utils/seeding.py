"""One random stream per concern, all derived from ``train.seed``.

Parameter init, dropout, latent noise, SE mask sampling and batch order
each get their own stream so that, e.g., changing the masking rate never
changes the model initialization.
"""

from dataclasses import dataclass

import numpy as np
import torch


@dataclass
class RngBundle:
    init_seed: int
    dropout_seed: int
    noise: torch.Generator
    mask: np.random.Generator
    data: np.random.Generator


def make_rngs(seed: int) -> RngBundle:
    init_ss, dropout_ss, noise_ss, mask_ss, data_ss = np.random.SeedSequence(seed).spawn(5)
    noise = torch.Generator()
    noise.manual_seed(int(noise_ss.generate_state(1)[0]))
    return RngBundle(
        init_seed=int(init_ss.generate_state(1)[0]),
        dropout_seed=int(dropout_ss.generate_state(1)[0]),
        noise=noise,
        mask=np.random.default_rng(mask_ss),
        data=np.random.default_rng(data_ss),
    )


def noise_generator(seed: int) -> torch.Generator:
    generator = torch.Generator()
    generator.manual_seed(seed)
    return generator
