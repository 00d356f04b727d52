from .mnist_idx import load_mnist_idx, save_mnist_idx, read_bytes
from .feature_file import load_feature_file, save_feature_file, parse_feature_file
from .transforms import normalize, parse_normalization, dequantize, pad_to_even, limit_per_class
from .stream import make_class_stream, parse_class_order
