#pragma once

#include <filesystem>
#include <string>

#include "gks/detection.hpp"
#include "gks/selector.hpp"

namespace gks {

// {hash_dim, turn_buckets, threshold, weights}; doubles use shortest round-trip formatting.
std::string detector_to_json(const DetectorModel& model);
DetectorModel detector_from_json(const std::string& text);

// {mus, sigmas, readout_weights, attention_flag, provider: {kind, seed|path, dim}}.
std::string selector_to_json(const SelectorModel& model);
SelectorModel selector_from_json(const std::string& text);

std::string provider_kind_name(ProviderKind kind);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gks
