"""
Z2Color driving network with optional behavioral-mode insertion.

Both variants share the same two conv blocks and two fully connected
layers. The MultiNet variant concatenates the 3x13x26 mode tensor onto the
first block's output, so conv2 sees three extra input channels.
"""

from collections import OrderedDict
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from multinet.core.errors import ShapeError
from multinet.core.models import MODE_TENSOR_SHAPE, BehavioralMode, NetworkConfig, NetworkVariant
from multinet.model.modes import ModeSpec, actuation, encode_modes
from multinet.nn.layers import BatchNorm2d, Conv2d, Layer, Linear, MaxPool2, ReLU, Tensor


class Z2Color:
    """
    Model state: layer parameters, batch-norm running statistics, the
    network config and the train/eval flag.
    """

    def __init__(self, config: Optional[NetworkConfig] = None):
        self.config = config or NetworkConfig()
        cfg = self.config
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
        pad = cfg.kernel_size // 2

        self.conv1 = Conv2d(cfg.input_channels, cfg.conv1_channels, cfg.kernel_size, rng, padding=pad)
        self.pool1 = MaxPool2()
        self.bn1 = BatchNorm2d(cfg.conv1_channels)
        self.relu1 = ReLU()
        self.conv2 = Conv2d(cfg.conv2_in_channels, cfg.conv2_channels, cfg.kernel_size, rng, padding=pad)
        self.pool2 = MaxPool2(floor=True)
        self.bn2 = BatchNorm2d(cfg.conv2_channels)
        self.relu2 = ReLU()
        self.fc1 = Linear(cfg.flat_features, cfg.hidden_width, rng)
        self.relu3 = ReLU()
        self.fc2 = Linear(cfg.hidden_width, cfg.output_size, rng)

        self.training = True
        self._block2_shape: Optional[Tuple[int, ...]] = None

    # ------------------------------------------------------------------
    # bookkeeping
    # ------------------------------------------------------------------

    @property
    def variant(self) -> NetworkVariant:
        return self.config.variant

    @property
    def is_multinet(self) -> bool:
        return self.config.variant is NetworkVariant.MULTINET

    def named_layers(self) -> List[Tuple[str, Layer]]:
        """Parameterized layers in declaration order."""
        return [
            ("conv1", self.conv1),
            ("bn1", self.bn1),
            ("conv2", self.conv2),
            ("bn2", self.bn2),
            ("fc1", self.fc1),
            ("fc2", self.fc2),
        ]

    def named_parameters(self) -> Dict[str, Tensor]:
        return OrderedDict(
            (f"{lname}.{pname}", p) for lname, layer in self.named_layers() for pname, p in layer.params.items()
        )

    def named_gradients(self) -> Dict[str, Tensor]:
        return OrderedDict(
            (f"{lname}.{pname}", g) for lname, layer in self.named_layers() for pname, g in layer.grads.items()
        )

    def state_dict(self) -> Dict[str, Tensor]:
        """Parameters then running statistics, layer by layer in declaration order."""
        state: Dict[str, Tensor] = OrderedDict()
        for lname, layer in self.named_layers():
            for pname, p in layer.params.items():
                state[f"{lname}.{pname}"] = p
            for bname, b in layer.buffers.items():
                state[f"{lname}.{bname}"] = b
        return state

    def load_state_dict(self, state: Dict[str, Tensor]) -> None:
        own = self.state_dict()
        missing = sorted(set(own) - set(state))
        if missing:
            raise ShapeError(f"state is missing entries: {', '.join(missing)}")
        for name, target in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != target.shape:
                raise ShapeError(f"{name} has shape {value.shape}, model expects {target.shape}")
            target[...] = value

    def copy_state(self) -> Dict[str, Tensor]:
        return OrderedDict((k, v.copy()) for k, v in self.state_dict().items())

    def train(self) -> "Z2Color":
        self.training = True
        return self

    def eval(self) -> "Z2Color":
        self.training = False
        return self

    def zero_grad(self) -> None:
        for _, layer in self.named_layers():
            layer.zero_grad()

    # ------------------------------------------------------------------
    # forward / backward
    # ------------------------------------------------------------------

    def _mode_input(self, modes: Optional[ModeSpec], batch: int) -> Optional[Tensor]:
        if self.is_multinet:
            if modes is None:
                raise ShapeError("the MultiNet variant requires a behavioral mode")
            return encode_modes(modes, batch)
        if modes is not None:
            raise ShapeError("the MTL variant takes no behavioral mode")
        return None

    def forward(self, images: Tensor, modes: Optional[ModeSpec] = None) -> Tensor:
        """
        Predict 10 steer and 10 motor values.

        Args:
            images: 12xHxW tensor or an Nx12xHxW batch
            modes: Behavioral mode (or one per sample) for MultiNet; None for MTL

        Returns:
            Length-20 vector, or an Nx20 batch
        """
        cfg = self.config
        squeeze = images.ndim == 3
        x = images[np.newaxis] if squeeze else images
        expected = (cfg.input_channels, cfg.image_height, cfg.image_width)
        if x.ndim != 4 or x.shape[1:] != expected:
            raise ShapeError(f"expected input {expected}, got {images.shape}")
        n = x.shape[0]
        mode_tensor = self._mode_input(modes, n)
        training = self.training

        h = self.conv1.forward(x, training)
        h = self.pool1.forward(h, training)
        h = self.bn1.forward(h, training)
        h = self.relu1.forward(h, training)
        if mode_tensor is not None:
            if h.shape[2:] != MODE_TENSOR_SHAPE[1:]:
                raise ShapeError(f"feature map {h.shape[2:]} cannot take a {MODE_TENSOR_SHAPE} mode tensor")
            h = np.concatenate([h, mode_tensor], axis=1)
        h = self.conv2.forward(h, training)
        h = self.pool2.forward(h, training)
        h = self.bn2.forward(h, training)
        h = self.relu2.forward(h, training)
        self._block2_shape = h.shape
        h = h.reshape(n, -1)
        h = self.fc1.forward(h, training)
        h = self.relu3.forward(h, training)
        out = self.fc2.forward(h, training)
        return out[0] if squeeze else out

    def backward(self, dout: Tensor) -> Tensor:
        """Accumulate parameter gradients; returns the gradient for the images."""
        if self._block2_shape is None:
            raise RuntimeError("backward called before forward")
        d = dout[np.newaxis] if dout.ndim == 1 else dout
        d = self.fc2.backward(d)
        d = self.relu3.backward(d)
        d = self.fc1.backward(d)
        d = d.reshape(self._block2_shape)
        d = self.relu2.backward(d)
        d = self.bn2.backward(d)
        d = self.pool2.backward(d)
        d = self.conv2.backward(d)
        # gradient reaching the mode tensor is dropped
        d = d[:, : self.config.conv1_channels]
        d = self.relu1.backward(d)
        d = self.bn1.backward(d)
        d = self.pool1.backward(d)
        d = self.conv1.backward(d)
        return d[0] if dout.ndim == 1 else d

    def predict(self, images: Tensor, mode: Optional[BehavioralMode] = None) -> Tuple[float, float]:
        """Eval-mode actuation (steer, motor) for a single 12xHxW input."""
        was_training = self.training
        self.eval()
        try:
            return actuation(self.forward(images, mode))
        finally:
            self.training = was_training


def parameter_count(model: Union[Z2Color, Layer, Iterable[Layer]]) -> int:
    """Scalar parameter count: kernels, biases and batch-norm affine terms."""
    if isinstance(model, Z2Color):
        layers: Iterable[Layer] = [layer for _, layer in model.named_layers()]
    elif isinstance(model, Layer):
        layers = [model]
    else:
        layers = model
    return int(sum(p.size for layer in layers for p in layer.params.values()))


def build_model(config: NetworkConfig) -> Z2Color:
    model = Z2Color(config)
    logger.debug(f"Built {config.variant.value} network with {parameter_count(model)} parameters (seed {config.seed})")
    return model
