#include <algorithm>
#include <cctype>

#include "fadkit/embedding_store.hpp"

namespace fadkit {

const std::vector<EmbeddingModelInfo>& embedding_model_registry() {
  // name, channels, sample rate, dim, context (s), hop (s)
  static const std::vector<EmbeddingModelInfo> registry = {
      {"VGGish", 1, 16000, 128, 0.96, 0.96},
      {"CLAP", 1, 44100, 1024, 7.0, 1.0},
      {"L-CLAP", 1, 48000, 512, 10.0, 1.0},
      {"MERT", 1, 24000, 768, 5.0, 0.013},
      {"CDPAM", 1, 22050, 512, 5.0, 1.0},
      {"EnCodec", 1, 24000, 128, std::nullopt, 0.013},
      {"EnCodec 48k", 2, 48000, 128, 1.0, 0.99},
      {"DAC", 2, 44100, 1024, 5.0, 0.012},
  };
  return registry;
}

std::optional<EmbeddingModelInfo> find_embedding_model(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  };
  const std::string key = lower(name);
  for (const auto& m : embedding_model_registry())
    if (lower(m.name) == key) return m;
  return std::nullopt;
}

}  // namespace fadkit
