#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace archbert {

enum class OpCategory { Convolution, Pooling, Activation, Normalization, Linear, Other };

std::string_view category_name(OpCategory c);

/// One entry of the built-in operation catalog.
struct OpInfo {
  std::string name;     // lowercase alphanumeric identifier used in graph files
  std::string display;  // framework-style spelling used in generated text
  OpCategory category;
  std::string phrase;   // noun phrase describing the operation
  std::string short_name;  // used in questions, e.g. "2d max pooling"
  std::optional<std::string> function;  // answer to "what does X do", probed ops only
  bool has_params;
};

/// All 85 operations. The first `kDefaultOpCount` entries form the default
/// generation vocabulary.
std::span<const OpInfo> op_catalog();
inline constexpr std::size_t kDefaultOpCount = 28;

const OpInfo& op_info(std::string_view name);  // throws DataError when unknown
const OpInfo* find_op_info(std::string_view name);

/// Names of the first `count` catalog ops.
std::vector<std::string> default_op_names(std::size_t count = kDefaultOpCount);

/// Frozen answer catalog (version 1, 51 entries).
inline constexpr int kAnswerCatalogVersion = 1;
inline constexpr std::size_t kAnswerCount = 51;
std::span<const std::string> answer_catalog();
std::size_t answer_id(std::string_view answer);  // throws DataError when unknown
std::string answer_catalog_file();

/// Ops probed by "what does X do" questions, in catalog order.
std::span<const std::string> probed_ops();
/// Ops probed by yes/no presence questions.
std::span<const std::string> presence_ops();

}  // namespace archbert
