// Writes a synthetic cross-lingual fixture as SQuAD JSON files.
#include <iostream>

#include <CLI11.hpp>

#include "spanforge/error.hpp"
#include "spanforge/synthetic.hpp"

int main(int argc, char** argv) {
  using namespace spanforge;
  CLI::App app{"Generate a synthetic source/target fixture", "spanforge_synth"};
  std::string fixture = "bilingual";
  std::size_t questions = 500;
  std::uint64_t seed = 42;
  std::string out;
  app.add_option("--fixture", fixture, "bilingual or calibrated")
      ->check(CLI::IsMember({"bilingual", "calibrated"}));
  app.add_option("--questions", questions, "questions per split");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--out", out, "output directory")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto f = fixture == "bilingual" ? synthetic::bilingual_cipher_fixture(questions, seed)
                                          : synthetic::calibrated_noise_fixture(questions, seed);
    const std::filesystem::path dir = out;
    save_squad_json(f.source, dir / "source.json");
    save_squad_json(f.target_train, dir / "target_train.json");
    save_squad_json(f.target_gold, dir / "target_train_gold.json");
    save_squad_json(f.target_dev, dir / "target_dev.json");
    std::cout << "wrote " << dir.string() << "/{source,target_train,target_train_gold,target_dev}.json\n";
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
