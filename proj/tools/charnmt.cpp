// Command line front end: train, translate, evaluate, attend.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "charnmt/checkpoint.hpp"
#include "charnmt/data.hpp"
#include "charnmt/decoder.hpp"
#include "charnmt/errors.hpp"
#include "charnmt/evaluate.hpp"
#include "charnmt/training.hpp"
#include "charnmt/utf8.hpp"
#include "json.hpp"

namespace {

using namespace charnmt;
namespace fs = std::filesystem;

std::vector<std::u32string> read_u32_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open file: " + path);
  std::vector<std::u32string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(utf8_decode(line));
  }
  return lines;
}

struct TrainArgs {
  TrainConfig config;
  std::string variant = "char";
  std::string train_src, train_trg, valid_src, valid_trg;
  std::string checkpoint_dir = "checkpoints";
  std::string resume_path;
  std::string log_path;
  int vocab_size = 300;
  int max_len = 512;
};

void write_vocab_file(const fs::path& path, const Vocabulary& vocab) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw config_error("cannot write vocabulary file: " + path.string());
  vocab.dump(os);
}

std::string epoch_checkpoint_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "epoch_%03d.ckpt", epoch);
  return buf;
}

int cmd_train(TrainArgs& args, const CLI::App& cmd) {
  args.config.variant = variant_from_name(args.variant);
  args.config.validate();

  RawCorpus raw = load_parallel_text(args.train_src, args.train_trg);
  if (raw.src.empty()) throw config_error("training corpus is empty after filtering");
  if (raw.dropped_by_length || raw.dropped_empty) {
    std::cerr << "dropped " << raw.dropped_by_length << " over-length and " << raw.dropped_empty
              << " empty pairs\n";
  }

  Model model;
  AdamState adam;
  int first_epoch = 0;
  if (!args.resume_path.empty()) {
    Checkpoint ckpt = load_checkpoint(args.resume_path);
    TrainConfig resumed = ckpt.train;
    // Only explicitly given flags override the stored configuration.
    if (cmd.count("--epochs")) resumed.max_epochs = args.config.max_epochs;
    if (cmd.count("--lr")) resumed.learning_rate = args.config.learning_rate;
    if (cmd.count("--lambda")) resumed.l2_lambda = args.config.l2_lambda;
    if (cmd.count("--clip")) resumed.clip_threshold = args.config.clip_threshold;
    if (cmd.count("--budget")) resumed.batch_budget = args.config.batch_budget;
    args.config = resumed;
    model = std::move(ckpt.model);
    adam = std::move(ckpt.adam);
    first_epoch = ckpt.epochs_done;
  } else {
    Vocabulary src_vocab = build_vocab(raw.src, args.vocab_size, true);
    Vocabulary trg_vocab = build_vocab(raw.trg, args.vocab_size);
    ModelConfig mc;
    mc.variant = args.config.variant;
    mc.embed_size = args.config.embed_size;
    mc.hidden_size = args.config.hidden_size;
    mc.attn_size = args.config.attn_size;
    model = Model(mc, std::move(src_vocab), std::move(trg_vocab), args.config.seed);
    adam = AdamState::init(model.params);
  }

  Corpus corpus = make_corpus(raw, model.src_vocab, model.trg_vocab);

  std::optional<std::pair<std::vector<std::u32string>, std::vector<std::u32string>>> valid;
  if (!args.valid_src.empty() || !args.valid_trg.empty()) {
    if (args.valid_src.empty() || args.valid_trg.empty()) {
      throw config_error("need both --valid-src and --valid-trg");
    }
    valid = {read_u32_lines(args.valid_src), read_u32_lines(args.valid_trg)};
    if (valid->first.size() != valid->second.size()) {
      throw config_error("validation files differ in line count");
    }
  }

  fs::create_directories(args.checkpoint_dir);
  write_vocab_file(fs::path(args.checkpoint_dir) / "src.vocab", model.src_vocab);
  write_vocab_file(fs::path(args.checkpoint_dir) / "trg.vocab", model.trg_vocab);
  const std::string log_path =
      args.log_path.empty() ? (fs::path(args.checkpoint_dir) / "train_log.jsonl").string()
                            : args.log_path;
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw config_error("cannot open log file: " + log_path);

  double best_bleu = -1.0;
  for (int epoch = first_epoch; epoch < args.config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(Rng::derive(args.config.seed, static_cast<std::uint64_t>(epoch)));
    EpochMetrics metrics = train_epoch(corpus, model, adam, args.config, rng);

    nlohmann::json record;
    record["epoch"] = epoch + 1;
    record["loss"] = metrics.mean_loss;
    record["bleu"] = nullptr;
    if (valid) {
      EvalResult ev = evaluate(model, valid->first, valid->second, args.max_len);
      record["bleu"] = ev.bleu.score;
      if (ev.bleu.score > best_bleu) {
        best_bleu = ev.bleu.score;
        save_checkpoint((fs::path(args.checkpoint_dir) / "best.ckpt").string(), model, adam,
                        args.config, epoch + 1);
      }
    }
    record["seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << record.dump() << '\n';
    log.flush();
    std::cout << "epoch " << (epoch + 1) << "/" << args.config.max_epochs << " loss "
              << metrics.mean_loss;
    if (valid) std::cout << " bleu " << record["bleu"].get<double>();
    std::cout << " (" << metrics.batches << " batches, " << static_cast<long>(metrics.tokens_per_sec)
              << " chars/s)\n";

    save_checkpoint((fs::path(args.checkpoint_dir) / epoch_checkpoint_name(epoch + 1)).string(),
                    model, adam, args.config, epoch + 1);
    save_checkpoint((fs::path(args.checkpoint_dir) / "latest.ckpt").string(), model, adam,
                    args.config, epoch + 1);
  }
  return 0;
}

std::string render_output_label(int id, const Vocabulary& vocab) {
  if (id == Vocabulary::kEos) return "</s>";
  if (id == Vocabulary::kUnk) return "<unk>";
  if (vocab.is_reserved(id)) return "<" + std::to_string(id) + ">";
  return utf8_encode(vocab.char_of(id));
}

// The word ending at source position pos (a space boundary labels the word
// just before it; the terminal boundary labels the final word).
std::string word_ending_at(const std::u32string& text, int pos) {
  std::int64_t end = pos;
  if (text[static_cast<std::size_t>(end)] == U' ') --end;
  std::int64_t start = end;
  while (start >= 0 && text[static_cast<std::size_t>(start)] != U' ') --start;
  if (end < start) return std::string();
  return utf8_encode(text.substr(static_cast<std::size_t>(start + 1),
                                 static_cast<std::size_t>(end - start)));
}

AttentionTrace build_trace(const Model& model, const std::u32string& source,
                           const TranslationResult& result) {
  AttentionTrace trace;
  trace.rows = result.attention_rows;
  for (int pos : result.positions) {
    if (model.config.variant == Variant::kChar) {
      trace.source_labels.push_back(utf8_encode(source[static_cast<std::size_t>(pos)]));
    } else {
      trace.source_labels.push_back(word_ending_at(source, pos));
    }
  }
  for (int id : result.ids) trace.output_labels.push_back(render_output_label(id, model.trg_vocab));
  return trace;
}

int cmd_translate(const std::string& checkpoint, const std::string& input,
                  const std::string& sentence, int max_len) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  std::vector<std::u32string> sources;
  if (!sentence.empty()) {
    sources.push_back(utf8_decode(sentence));
  } else if (!input.empty()) {
    sources = read_u32_lines(input);
  } else {
    throw config_error("translate needs --input or --sentence");
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].empty()) {
      std::cout << '\n';
      continue;
    }
    TranslationResult t = translate_sentence(ckpt.model, sources[i], max_len);
    if (t.truncated) {
      std::cerr << "line " << (i + 1) << ": output truncated at max-len " << max_len << '\n';
    }
    std::cout << utf8_encode(t.text) << '\n';
  }
  return 0;
}

void check_vocab_compatibility(const std::string& path, const Vocabulary& expected,
                               const char* side) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open vocabulary file: " + path);
  Vocabulary given = Vocabulary::parse(in);
  if (!(given == expected)) {
    throw config_error(std::string(side) +
                       " vocabulary does not match the checkpoint's vocabulary: " + path);
  }
}

int cmd_evaluate(const std::string& checkpoint, const std::string& src_path,
                 const std::string& ref_path, const std::string& hyp_out, int max_len,
                 const std::string& vocab_src, const std::string& vocab_trg) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  if (!vocab_src.empty()) check_vocab_compatibility(vocab_src, ckpt.model.src_vocab, "source");
  if (!vocab_trg.empty()) check_vocab_compatibility(vocab_trg, ckpt.model.trg_vocab, "target");

  std::vector<std::u32string> sources = read_u32_lines(src_path);
  std::vector<std::u32string> refs = read_u32_lines(ref_path);
  if (sources.size() != refs.size()) {
    throw config_error("source and reference files differ in line count");
  }
  if (sources.empty()) throw config_error("evaluation corpus is empty");

  EvalResult result = evaluate(ckpt.model, sources, refs, max_len);
  if (!hyp_out.empty()) {
    std::ofstream os(hyp_out, std::ios::binary | std::ios::trunc);
    if (!os) throw config_error("cannot write hypotheses file: " + hyp_out);
    for (const auto& h : result.hypotheses) os << h << '\n';
  }
  std::cout << "BLEU = " << result.bleu.score << ", " << result.bleu.precisions[0] * 100 << "/"
            << result.bleu.precisions[1] * 100 << "/" << result.bleu.precisions[2] * 100 << "/"
            << result.bleu.precisions[3] * 100 << " (BP=" << result.bleu.brevity_penalty
            << ", hyp_len=" << result.bleu.hyp_length << ", ref_len=" << result.bleu.ref_length
            << ")\n";
  if (result.truncated) {
    std::cerr << result.truncated << " outputs truncated at max-len " << max_len << '\n';
  }
  return 0;
}

int cmd_attend(const std::string& checkpoint, const std::string& sentence, const std::string& out,
               int max_len) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  std::u32string source = utf8_decode(sentence);
  if (source.empty()) throw config_error("attend needs a non-empty --sentence");
  TranslationResult t = translate_sentence(ckpt.model, source, max_len);
  AttentionTrace trace = build_trace(ckpt.model, source, t);
  std::ofstream os(out, std::ios::binary | std::ios::trunc);
  if (!os) throw config_error("cannot write trace file: " + out);
  trace.write(os);
  if (t.truncated) std::cerr << "output truncated at max-len " << max_len << '\n';
  std::cout << utf8_encode(t.text) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Character-level NMT with char and hierarchical char2word encoders"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a model");
  train->add_option("--variant", train_args.variant, "Model variant: char or char2word")
      ->check(CLI::IsMember({"char", "char2word"}));
  train->add_option("--train-src", train_args.train_src, "Source training text")->required();
  train->add_option("--train-trg", train_args.train_trg, "Target training text")->required();
  train->add_option("--valid-src", train_args.valid_src, "Source validation text");
  train->add_option("--valid-trg", train_args.valid_trg, "Target validation text");
  train->add_option("--checkpoint-dir", train_args.checkpoint_dir, "Where checkpoints go");
  train->add_option("--resume", train_args.resume_path, "Continue from a checkpoint");
  train->add_option("--epochs", train_args.config.max_epochs, "Epochs to train");
  train->add_option("--seed", train_args.config.seed, "Master seed");
  train->add_option("--budget", train_args.config.batch_budget,
                    "Padded character budget per batch");
  train->add_option("--hidden", train_args.config.hidden_size, "Hidden units per direction");
  train->add_option("--embed", train_args.config.embed_size, "Embedding size");
  train->add_option("--attn", train_args.config.attn_size, "Attention size");
  train->add_option("--lr", train_args.config.learning_rate, "Adam learning rate");
  train->add_option("--lambda", train_args.config.l2_lambda, "L2 weight");
  train->add_option("--clip", train_args.config.clip_threshold, "Gradient norm clip threshold");
  train->add_option("--vocab-size", train_args.vocab_size, "Characters per vocabulary");
  train->add_option("--max-len", train_args.max_len, "Decode limit for validation");
  train->add_option("--log", train_args.log_path, "JSONL metrics log path");

  std::string checkpoint, input, sentence, src_path, ref_path, hyp_out, trace_out;
  std::string vocab_src, vocab_trg;
  int max_len = 512;

  CLI::App* translate = app.add_subcommand("translate", "Greedy-decode text");
  translate->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  translate->add_option("--input", input, "Input file, one sentence per line")
      ->check(CLI::ExistingFile);
  translate->add_option("--sentence", sentence, "Translate a single sentence");
  translate->add_option("--max-len", max_len, "Decode limit");

  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Score BLEU against references");
  evaluate_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  evaluate_cmd->add_option("--src", src_path, "Source text")->required();
  evaluate_cmd->add_option("--ref", ref_path, "Reference text")->required();
  evaluate_cmd->add_option("--hyp-out", hyp_out, "Write hypotheses here");
  evaluate_cmd->add_option("--vocab-src", vocab_src, "Expected source vocabulary dump");
  evaluate_cmd->add_option("--vocab-trg", vocab_trg, "Expected target vocabulary dump");
  evaluate_cmd->add_option("--max-len", max_len, "Decode limit");

  CLI::App* attend = app.add_subcommand("attend", "Export an attention trace");
  attend->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  attend->add_option("--sentence", sentence, "Source sentence")->required();
  attend->add_option("--out", trace_out, "Trace file path")->required();
  attend->add_option("--max-len", max_len, "Decode limit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_args, *train);
    if (translate->parsed()) return cmd_translate(checkpoint, input, sentence, max_len);
    if (evaluate_cmd->parsed()) {
      return cmd_evaluate(checkpoint, src_path, ref_path, hyp_out, max_len, vocab_src, vocab_trg);
    }
    if (attend->parsed()) return cmd_attend(checkpoint, sentence, trace_out, max_len);
  } catch (const charnmt::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
