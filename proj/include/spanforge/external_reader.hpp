#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "spanforge/reader.hpp"

namespace spanforge {

// One newline-delimited JSON connection to a reader adapter.
class Transport {
 public:
  virtual ~Transport() = default;
  // Sends one request line and waits for one response line.
  // Throws TransportError on any I/O failure or end of stream.
  virtual std::string round_trip(std::string_view line) = 0;
};

// Spawns `/bin/sh -c command` and talks over its standard input and output.
std::unique_ptr<Transport> spawn_process_transport(const std::string& command);
// Connects to host:port.
std::unique_ptr<Transport> connect_tcp_transport(const std::string& address);

// Reader backed by an external adapter process. Models are handles into the
// adapter's registry, so checkpoints are only meaningful to the adapter that
// produced them. Requests on one connection are serialized.
//
//   -> {"op":"train","dataset_path":..,"config":{..},"language":..[,"init_model_id":..]}
//   <- {"ok":true,"model_id":..}
//   -> {"op":"predict","model_id":..,"language":..,"items":[{"context":..,"question":..}]}
//   <- {"ok":true,"results":[{"windows":[..]}]}
//   <- {"ok":false,"error":..}
class ExternalReader final : public Reader {
 public:
  // Model id the adapter uses for its untrained starting point.
  static constexpr std::string_view kPretrainedId = "pretrained";

  explicit ExternalReader(std::unique_ptr<Transport> transport);

  ReaderKind kind() const override { return ReaderKind::External; }
  ReaderModel pretrained(const TrainConfig& config) const override;
  ReaderModel train(const ReaderModel& init, const Dataset& data,
                    const TrainConfig& config) const override;
  SpanDistributions predict(const ReaderModel& model, const Context& context,
                            const Question& question, Language language) const override;
  // Sends the whole batch as one request.
  std::vector<SpanDistributions> predict_batch(const ReaderModel& model,
                                               std::span<const PredictItem> items,
                                               Language language, int jobs) const override;

  static std::string model_id(const ReaderModel& model);

 private:
  nlohmann::json call(const nlohmann::json& request) const;

  std::unique_ptr<Transport> transport_;
  mutable std::mutex mutex_;
};

}  // namespace spanforge
