#include "archbert/catalog.hpp"

#include <algorithm>
#include <unordered_map>

#include "archbert/error.hpp"

namespace archbert {

namespace {

using C = OpCategory;

const std::vector<OpInfo>& catalog_storage() {
  static const std::vector<OpInfo> ops = {
      // Default generation vocabulary.
      {"conv2d", "Conv2d", C::Convolution, "2d convolution layer that slides learnable filters over the feature map",
       "2d convolution", std::nullopt, true},
      {"dilconv2d", "DilConv2d", C::Convolution,
       "2d dilated convolution which creates a wider kernel by inserting spaces between the kernel elements",
       "2d dilated convolution", "creating a wider kernel by inserting spaces between the kernel elements", true},
      {"sepconv2d", "SepConv2d", C::Convolution,
       "separable convolution which divides a single convolution into two smaller convolutions to reduce the number "
       "of parameters",
       "separable convolution", "dividing a single convolution into two smaller convolutions", true},
      {"convtranspose2d", "ConvTranspose2d", C::Convolution,
       "2d transposed convolution layer that applies convolution with a fractional stride", "2d transposed convolution",
       std::nullopt, true},
      {"conv1d", "Conv1d", C::Convolution, "1d convolution layer over temporal sequences", "1d convolution",
       std::nullopt, true},
      {"maxpool2d", "MaxPool2d", C::Pooling,
       "2d max pooling layer which calculates the maximum value for each patch of the feature map", "2d max pooling",
       "calculating the maximum value for each patch of the feature map", false},
      {"avgpool2d", "AvgPool2d", C::Pooling,
       "2d average pooling layer used for calculating the average for each patch of the feature map",
       "2d average pooling", "calculating the average for each patch of the feature map", false},
      {"adaptiveavgpool2d", "AdaptiveAvgPool2d", C::Pooling,
       "2d adaptive average pooling layer that produces a fixed output size", "2d adaptive average pooling",
       "averaging the input down to a fixed output size", false},
      {"adaptivemaxpool2d", "AdaptiveMaxPool2d", C::Pooling,
       "2d adaptive max pooling layer that keeps the strongest response in a fixed output size",
       "2d adaptive max pooling", std::nullopt, false},
      {"relu", "ReLU", C::Activation, "rectifier activation function which clips negative inputs to nothing",
       "rectifier", std::nullopt, false},
      {"gelu", "GELU", C::Activation, "gaussian error unit activation function which is a smoother rectifier",
       "gaussian error unit", "weighting each input by the gaussian cumulative distribution", false},
      {"hardswish", "Hardswish", C::Activation,
       "hard swish activation function that replaces the computationally expensive swish with a piecewise analogue",
       "hard swish", "approximating the swish activation with a piecewise function", false},
      {"sigmoid", "Sigmoid", C::Activation, "logistic activation function that squashes inputs into the unit interval",
       "logistic", std::nullopt, false},
      {"tanh", "Tanh", C::Activation, "hyperbolic tangent activation function", "hyperbolic tangent", std::nullopt,
       false},
      {"leakyrelu", "LeakyReLU", C::Activation,
       "leaky rectifier activation function with a small slope for negative inputs", "leaky rectifier", std::nullopt,
       false},
      {"silu", "SiLU", C::Activation, "swish activation function that multiplies the input by its logistic gate",
       "swish", std::nullopt, false},
      {"relu6", "ReLU6", C::Activation, "clipped rectifier activation function limited to a maximum value of 6",
       "clipped rectifier", std::nullopt, false},
      {"hardsigmoid", "Hardsigmoid", C::Activation,
       "hard logistic activation function which is a piecewise approximation of the logistic curve", "hard logistic",
       "approximating the logistic curve with a piecewise function", false},
      {"batchnorm2d", "BatchNorm2d", C::Normalization,
       "2d batch normalization module which normalizes each channel over the mini batch", "2d batch normalization",
       "normalizing each channel over the mini batch", true},
      {"layernorm", "LayerNorm", C::Normalization,
       "layer normalization over input across the features instead of the batch dimension", "layer normalization",
       "normalizing the input across the features instead of the batch dimension", true},
      {"groupnorm", "GroupNorm", C::Normalization, "group normalization module that normalizes channels in groups",
       "group normalization", std::nullopt, true},
      {"instancenorm2d", "InstanceNorm2d", C::Normalization,
       "2d instance normalization module that normalizes every sample separately", "2d instance normalization",
       std::nullopt, true},
      {"linear", "Linear", C::Linear, "fully connected module which applies an affine transformation to the incoming data",
       "fully connected", std::nullopt, true},
      {"dropout", "Dropout", C::Other,
       "dropout layer that is used to drastically reduce the chance of overfitting during training", "dropout",
       "reducing the chance of overfitting during training", false},
      {"posenc", "PosEnc", C::Other, "positional encoding module that injects token order information",
       "positional encoding", std::nullopt, true},
      {"zero", "Zero", C::Other, "zero operation that outputs an empty feature map", "zero operation", std::nullopt,
       false},
      {"add", "Add", C::Other, "elementwise summation node that merges two branches", "elementwise summation",
       std::nullopt, false},
      {"softmax", "Softmax", C::Other, "softmax module that turns scores into a probability distribution",
       "normalized exponential", std::nullopt, false},
      // Extended catalog.
      {"conv3d", "Conv3d", C::Convolution, "3d convolution layer for volumetric inputs", "3d convolution",
       std::nullopt, true},
      {"depthwiseconv2d", "DepthwiseConv2d", C::Convolution,
       "depthwise convolution that filters every channel on its own", "depthwise convolution", std::nullopt, true},
      {"deformconv2d", "DeformConv2d", C::Convolution,
       "deformable convolution that learns offsets for its sampling locations", "deformable convolution",
       std::nullopt, true},
      {"convtranspose1d", "ConvTranspose1d", C::Convolution, "1d transposed convolution for learned sequence widening",
       "1d transposed convolution", std::nullopt, true},
      {"pointwiseconv2d", "PointwiseConv2d", C::Convolution, "pointwise convolution that mixes channels at every pixel",
       "pointwise convolution", std::nullopt, true},
      {"groupedconv2d", "GroupedConv2d", C::Convolution,
       "grouped convolution that splits channels into independent groups", "grouped convolution", std::nullopt, true},
      {"convtranspose3d", "ConvTranspose3d", C::Convolution, "3d transposed convolution for volumetric decoders",
       "3d transposed convolution", std::nullopt, true},
      {"maxpool1d", "MaxPool1d", C::Pooling, "1d max pooling layer over sequence windows", "1d max pooling",
       std::nullopt, false},
      {"avgpool1d", "AvgPool1d", C::Pooling, "1d average pooling layer over sequence windows", "1d average pooling",
       std::nullopt, false},
      {"maxpool3d", "MaxPool3d", C::Pooling, "3d max pooling layer for volumetric feature maps", "3d max pooling",
       std::nullopt, false},
      {"avgpool3d", "AvgPool3d", C::Pooling, "3d average pooling layer for volumetric feature maps",
       "3d average pooling", std::nullopt, false},
      {"adaptiveavgpool1d", "AdaptiveAvgPool1d", C::Pooling,
       "1d adaptive average pooling layer with a fixed output length", "1d adaptive average pooling", std::nullopt,
       false},
      {"lppool2d", "LPPool2d", C::Pooling, "power average pooling layer over 2d windows", "power average pooling",
       std::nullopt, false},
      {"fractionalmaxpool2d", "FractionalMaxPool2d", C::Pooling,
       "fractional max pooling layer with pseudo random window placement", "fractional max pooling", std::nullopt,
       false},
      {"elu", "ELU", C::Activation, "exponential unit activation function with a smooth negative branch",
       "exponential unit", std::nullopt, false},
      {"selu", "SELU", C::Activation, "scaled exponential unit activation function for self normalizing networks",
       "scaled exponential unit", std::nullopt, false},
      {"celu", "CELU", C::Activation, "continuously differentiable exponential unit activation function",
       "continuous exponential unit", std::nullopt, false},
      {"prelu", "PReLU", C::Activation, "parametric rectifier activation function with a learned negative slope",
       "parametric rectifier", std::nullopt, true},
      {"mish", "Mish", C::Activation, "self regularized non monotonic activation function", "non monotonic",
       std::nullopt, false},
      {"softplus", "Softplus", C::Activation, "smooth approximation of the rectifier activation function",
       "smooth rectifier", std::nullopt, false},
      {"softsign", "Softsign", C::Activation, "activation function that divides the input by one plus its magnitude",
       "sign approximation", std::nullopt, false},
      {"hardtanh", "Hardtanh", C::Activation, "hard hyperbolic tangent activation function that clips to a range",
       "hard hyperbolic tangent", std::nullopt, false},
      {"logsigmoid", "LogSigmoid", C::Activation, "logarithm of the logistic activation function", "log logistic",
       std::nullopt, false},
      {"tanhshrink", "Tanhshrink", C::Activation,
       "shrinkage activation that subtracts the hyperbolic tangent from the input", "tangent shrinkage",
       std::nullopt, false},
      {"glu", "GLU", C::Activation, "gated unit activation that splits the input into a value and a gate",
       "gated unit", std::nullopt, false},
      {"batchnorm1d", "BatchNorm1d", C::Normalization, "1d batch normalization module for sequence features",
       "1d batch normalization", std::nullopt, true},
      {"frozenbatchnorm2d", "FrozenBatchNorm2d", C::Normalization,
       "2d frozen batch normalization module in which the batch statistics and the affine parameters are fixed",
       "2d frozen batch normalization", std::nullopt, true},
      {"syncbatchnorm", "SyncBatchNorm", C::Normalization,
       "synchronized batch normalization module that shares statistics across devices",
       "synchronized batch normalization", std::nullopt, true},
      {"rmsnorm", "RMSNorm", C::Normalization, "root mean square normalization module without centering",
       "root mean square normalization", std::nullopt, true},
      {"instancenorm1d", "InstanceNorm1d", C::Normalization,
       "1d instance normalization module for sequence features", "1d instance normalization", std::nullopt, true},
      {"localresponsenorm", "LocalResponseNorm", C::Normalization,
       "local response normalization module across neighbouring channels", "local response normalization",
       std::nullopt, false},
      {"bilinear", "Bilinear", C::Linear, "bilinear module that combines two inputs with a learned tensor",
       "two input product", std::nullopt, true},
      {"lazylinear", "LazyLinear", C::Linear, "fully connected module whose input size is inferred on first use",
       "lazily sized fully connected", std::nullopt, true},
      {"multiheadattention", "MultiheadAttention", C::Other,
       "multi head attention module that attends to several subspaces at once", "multi head attention",
       std::nullopt, true},
      {"embedding", "Embedding", C::Other, "embedding table that maps token ids to dense vectors", "lookup table",
       std::nullopt, true},
      {"flatten", "Flatten", C::Other, "flatten operation that collapses spatial dimensions into one",
       "dimension collapsing", std::nullopt, false},
      {"upsample", "Upsample", C::Other, "upsample layer that enlarges the spatial resolution", "resolution increasing",
       std::nullopt, false},
      {"pixelshuffle", "PixelShuffle", C::Other, "sub pixel rearrangement from channels into space", "sub pixel",
       std::nullopt, false},
      {"identity", "Identity", C::Other, "identity operation that passes its input through unchanged",
       "pass through", std::nullopt, false},
      {"concat", "Concat", C::Other, "concatenation node that stacks branches along the channels",
       "channel stacking", std::nullopt, false},
      {"mul", "Mul", C::Other, "elementwise product node that gates one branch by another", "elementwise product",
       std::nullopt, false},
      {"matmul", "MatMul", C::Other, "batched matrix product between two activations", "matrix product",
       std::nullopt, false},
      {"reshape", "Reshape", C::Other, "reshape operation that changes the tensor layout", "layout change",
       std::nullopt, false},
      {"permute", "Permute", C::Other, "axis reordering operation for activations", "axis reordering", std::nullopt,
       false},
      {"squeezeexcite", "SqueezeExcite", C::Other,
       "squeeze and excitation block that recalibrates channel responses", "channel recalibration", std::nullopt,
       true},
      {"stochasticdepth", "StochasticDepth", C::Other,
       "stochastic depth layer which aims to shrink the depth of a network during training", "stochastic depth",
       std::nullopt, false},
      {"anchorgenerator", "AnchorGenerator", C::Other,
       "anchor generator module which is a standard for 2d anchor based detectors", "anchor generator", std::nullopt,
       false},
      {"roialign", "RoIAlign", C::Other, "region of interest alignment for detection heads", "region alignment",
       std::nullopt, false},
      {"quantstub", "QuantStub", C::Other, "quantize stub module that is a place holder for quantize operation",
       "quantize stub", std::nullopt, false},
      {"dequantstub", "DeQuantStub", C::Other,
       "dequantization module which converts tensors from quantized to floating point", "dequantization",
       std::nullopt, false},
      {"rcnntransform", "RCNNTransform", C::Other,
       "generalized rcnn transform module which performs input transformation before the detector",
       "detector input transform", std::nullopt, false},
      {"channelshuffle", "ChannelShuffle", C::Other, "channel shuffle operation that interleaves channel groups",
       "channel interleaving", std::nullopt, false},
      {"lstm", "LSTM", C::Other, "long short term memory recurrent module", "long short term memory", std::nullopt,
       true},
      {"gru", "GRU", C::Other, "gated recurrent module with reset and update gates", "gated recurrent",
       std::nullopt, true},
      {"alphadropout", "AlphaDropout", C::Other, "alpha variant of random unit masking that keeps self normalization",
       "alpha masking", std::nullopt, false},
      {"dropout2d", "Dropout2d", C::Other, "channel wise random masking layer for feature maps",
       "channel masking", std::nullopt, false},
      {"zeropad2d", "ZeroPad2d", C::Other, "padding layer that surrounds feature maps with blank borders",
       "border padding", std::nullopt, false},
  };
  return ops;
}

const std::unordered_map<std::string, const OpInfo*>& catalog_index() {
  static const auto index = [] {
    std::unordered_map<std::string, const OpInfo*> m;
    for (const auto& op : catalog_storage()) m.emplace(op.name, &op);
    return m;
  }();
  return index;
}

const std::vector<std::string> kProbed = {"maxpool2d", "avgpool2d",   "adaptiveavgpool2d", "dilconv2d",
                                          "sepconv2d", "hardsigmoid", "hardswish",         "gelu",
                                          "layernorm", "batchnorm2d", "dropout"};

const std::vector<std::string> kPresence = {"conv2d",   "conv1d",        "convtranspose2d", "adaptivemaxpool2d",
                                            "relu",     "sigmoid",       "tanh",            "leakyrelu",
                                            "silu",     "relu6",         "groupnorm",       "instancenorm2d",
                                            "linear",   "posenc",        "zero",            "add",
                                            "softmax",  "maxpool2d"};

std::vector<std::string> build_answers() {
  std::vector<std::string> answers;
  for (std::size_t i = 0; i < kDefaultOpCount; ++i) {
    const auto& op = catalog_storage()[i];
    if (op.category == C::Convolution || op.category == C::Pooling || op.category == C::Activation ||
        op.category == C::Normalization) {
      answers.push_back(op.display);
    }
  }
  answers.emplace_back("none");
  for (const char* k : {"1*1", "3*3", "5*5", "7*7"}) answers.emplace_back(k);
  answers.emplace_back("yes");
  answers.emplace_back("no");
  for (const auto& name : kProbed) answers.push_back(*catalog_index().at(name)->function);
  for (const auto& name : kProbed) answers.push_back("this model does not include " + catalog_index().at(name)->display);
  return answers;
}

}  // namespace

std::string_view category_name(OpCategory c) {
  switch (c) {
    case C::Convolution: return "convolution";
    case C::Pooling: return "pooling";
    case C::Activation: return "activation";
    case C::Normalization: return "normalization";
    case C::Linear: return "linear";
    case C::Other: return "other";
  }
  return "other";
}

std::span<const OpInfo> op_catalog() { return catalog_storage(); }

const OpInfo* find_op_info(std::string_view name) {
  auto it = catalog_index().find(std::string(name));
  return it == catalog_index().end() ? nullptr : it->second;
}

const OpInfo& op_info(std::string_view name) {
  const auto* info = find_op_info(name);
  if (!info) throw DataError("op '" + std::string(name) + "' is not in the catalog");
  return *info;
}

std::vector<std::string> default_op_names(std::size_t count) {
  if (count > catalog_storage().size()) throw DataError("op catalog has only 85 entries");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < count; ++i) names.push_back(catalog_storage()[i].name);
  return names;
}

std::span<const std::string> answer_catalog() {
  static const std::vector<std::string> answers = build_answers();
  return answers;
}

std::size_t answer_id(std::string_view answer) {
  const auto answers = answer_catalog();
  auto it = std::find(answers.begin(), answers.end(), answer);
  if (it == answers.end()) throw DataError("answer '" + std::string(answer) + "' is not in the catalog");
  return static_cast<std::size_t>(it - answers.begin());
}

std::string answer_catalog_file() {
  std::string out;
  for (const auto& a : answer_catalog()) out += a + "\n";
  return out;
}

std::span<const std::string> probed_ops() { return kProbed; }
std::span<const std::string> presence_ops() { return kPresence; }

}  // namespace archbert
