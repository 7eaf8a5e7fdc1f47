#include "bae/entropy_probe.hpp"

#include "bae/detail/bytes.hpp"
#include "bae/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

namespace bae {

namespace {

SweepRow probe_file(const std::filesystem::path& file, const TrainConfig& config,
                    std::uint64_t model_seed) {
  SweepRow row;
  row.dataset = file.filename().string();
  try {
    const HiddenStateSet set = load_dataset(file);
    const TrainResult trained = train(config, set, model_seed);
    const EvalMetrics m = evaluate(trained.model, set);
    row.final_recon_loss = m.recon_loss;
    row.entropy_bits_bernoulli = m.entropy_bits_bernoulli;
    row.entropy_bits_eq4 = m.entropy_bits_eq4;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

}  // namespace

std::vector<SweepRow> sweep_entropy(const std::filesystem::path& dir, const TrainConfig& config,
                                    std::uint64_t model_seed, unsigned jobs) {
  config.validate();
  if (!std::filesystem::is_directory(dir))
    throw std::invalid_argument(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".baeh")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<SweepRow> rows(files.size());
  const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(files.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < files.size();)
      rows[i] = probe_file(files[i], config, model_seed);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  std::string text = "dataset,final_recon_loss,entropy_bits_bernoulli,entropy_bits_eq4\n";
  char line[128];
  for (const auto& r : rows) {
    if (r.dataset.find_first_of(",\"\n") != std::string::npos)
      throw std::invalid_argument("dataset name not representable in CSV: " + r.dataset);
    text += r.dataset;
    if (r.error) {
      text += ",nan,nan,nan\n";
      continue;
    }
    std::snprintf(line, sizeof line, ",%.9g,%.9g,%.9g\n", r.final_recon_loss,
                  r.entropy_bits_bernoulli, r.entropy_bits_eq4);
    text += line;
  }
  detail::write_file(path, {text.begin(), text.end()});
}

}  // namespace bae
