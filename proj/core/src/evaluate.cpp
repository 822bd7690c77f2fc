#include "charnmt/evaluate.hpp"

#include "charnmt/decoder.hpp"
#include "charnmt/encoder.hpp"
#include "charnmt/errors.hpp"
#include "charnmt/utf8.hpp"

namespace charnmt {

TranslationResult translate_sentence(const Model& model, const std::u32string& source,
                                     int max_len) {
  if (source.empty()) throw contract_error("translate_sentence: empty source");
  Graph g;
  BoundParams bound = bind_params(g, model.params);
  ModelVars mv = bind_model(g, model, bound);
  EncoderOutput enc = encode_source(g, encode_text(source, model.src_vocab), mv);
  GreedyResult res = greedy_decode(g, enc, mv, max_len);

  TranslationResult out;
  out.ids = res.ids;
  out.text = decode_ids(res.ids, model.trg_vocab);
  out.attention_rows = std::move(res.trace.rows);
  out.positions = enc.positions;
  out.truncated = res.truncated;
  return out;
}

EvalResult evaluate(const Model& model, std::span<const std::u32string> sources,
                    std::span<const std::u32string> references, int max_len) {
  if (sources.size() != references.size()) {
    throw contract_error("evaluate: sources and references differ in count");
  }
  if (sources.empty()) throw contract_error("evaluate: empty corpus");

  EvalResult out;
  out.hypotheses.reserve(sources.size());
  std::vector<std::string> refs;
  refs.reserve(references.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    TranslationResult t = translate_sentence(model, sources[i], max_len);
    if (t.truncated) ++out.truncated;
    out.hypotheses.push_back(utf8_encode(t.text));
    refs.push_back(utf8_encode(references[i]));
  }
  out.bleu = bleu(out.hypotheses, refs);
  return out;
}

}  // namespace charnmt
