#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "archbert/datagen.hpp"

namespace archbert {

enum class RecordKind { BiModal, AQA, ACD, BACD, AC };

std::string_view record_kind_name(RecordKind k);

/// Kind of a parsed record, inferred from its keys.
RecordKind detect_record_kind(const nlohmann::json& doc);

nlohmann::ordered_json to_json(const BiModalSample& s);
nlohmann::ordered_json to_json(const AQASample& s);
nlohmann::ordered_json to_json(const ACDPair& s);
nlohmann::ordered_json to_json(const BACDSample& s);
nlohmann::ordered_json to_json(const ACSample& s);

BiModalSample bimodal_from_json(const nlohmann::json& doc);
AQASample aqa_from_json(const nlohmann::json& doc);
ACDPair acd_from_json(const nlohmann::json& doc);
BACDSample bacd_from_json(const nlohmann::json& doc);
ACSample ac_from_json(const nlohmann::json& doc);

/// Non-empty lines of a JSONL file, parsed. ParseError carries the line.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

template <typename T>
void write_jsonl(std::ostream& out, const std::vector<T>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

template <typename T>
void write_jsonl(const std::string& path, const std::vector<T>& records);

std::vector<BiModalSample> load_bimodal(const std::string& path);
std::vector<AQASample> load_aqa(const std::string& path);
std::vector<ACDPair> load_acd(const std::string& path);
std::vector<BACDSample> load_bacd(const std::string& path);
std::vector<ACSample> load_ac(const std::string& path);

/// AC samples built from the positive descriptions of a bi-modal set,
/// one caption per distinct graph.
std::vector<ACSample> captions_from_bimodal(const std::vector<BiModalSample>& samples);

struct DatasetStats {
  std::string kind;
  std::size_t records = 0;
  std::size_t architectures = 0;
  double mean_nodes = 0.0;
  std::size_t max_nodes = 0;
  std::size_t min_nodes = 0;
  std::size_t unique_ops = 0;
  double positive_fraction = 0.0;  // y/label == 1 share; questions for AQA
  double samples_per_arch = 0.0;
};

DatasetStats dataset_stats(const std::vector<nlohmann::json>& records);
nlohmann::ordered_json to_json(const DatasetStats& s);

}  // namespace archbert
