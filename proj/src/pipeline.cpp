#include "refverify/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include "refverify/errors.hpp"

namespace refverify {

namespace {

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

// Lowercased words up to the first sentence punctuation, whitespace collapsed.
// "Mug." -> "mug", "tennis racket" -> "tennis racket".
std::string extract_class_token(const std::string& reply) {
  std::string out;
  bool pending_space = false;
  for (char raw : reply) {
    const unsigned char c = static_cast<unsigned char>(raw);
    if (raw == '.' || raw == ',' || raw == ';' || raw == ':' || raw == '!' || raw == '?' ||
        raw == '\n') {
      if (!out.empty()) break;
      continue;  // leading punctuation is skipped
    }
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// Keeps the `cap` highest-confidence proposals (ties favor earlier ones)
// without disturbing their original relative order.
std::vector<Proposal> cap_proposals(std::vector<Proposal> proposals, int cap) {
  if (cap <= 0 || proposals.size() <= static_cast<size_t>(cap)) return proposals;
  std::vector<size_t> order(proposals.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return proposals[a].confidence > proposals[b].confidence;
  });
  order.resize(static_cast<size_t>(cap));
  std::sort(order.begin(), order.end());
  std::vector<Proposal> kept;
  kept.reserve(order.size());
  for (size_t i : order) kept.push_back(std::move(proposals[i]));
  return kept;
}

std::vector<BoundingBox> boxes_of(const std::vector<Proposal>& proposals,
                                  const std::vector<int>& indices) {
  std::vector<BoundingBox> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(proposals[static_cast<size_t>(i)].box);
  return out;
}

}  // namespace

const char* to_string(DecisionPath path) {
  switch (path) {
    case DecisionPath::UniqueTrue: return "UniqueTrue";
    case DecisionPath::TieBreak: return "TieBreak";
    case DecisionPath::Fallback: return "Fallback";
    case DecisionPath::AbstainNone: return "AbstainNone";
    case DecisionPath::NoProposals: return "NoProposals";
  }
  return "?";
}

void PromptSet::validate() const {
  for (const auto* tmpl : {&class_prompt, &verify_prompt, &select_prompt})
    if (tmpl->find("{expr}") == std::string::npos)
      throw std::invalid_argument("prompt template lacks the {expr} placeholder");
  if (select_prompt.find("{n}") == std::string::npos)
    throw std::invalid_argument("select prompt lacks the {n} placeholder");
  if (select_prompt.find("none") == std::string::npos)
    throw std::invalid_argument("select prompt must permit a 'none' reply");
}

std::string instantiate_prompt(const std::string& tmpl, const std::string& expr,
                               std::optional<int> n) {
  std::string out = replace_all(tmpl, "{expr}", expr);
  if (n) out = replace_all(out, "{n}", std::to_string(*n));
  return out;
}

VlmReply VlmSession::ask(const std::string& prompt, const std::optional<RasterImage>& image,
                         std::optional<double> temperature) {
  VlmRequest request;
  request.prompt = prompt;
  if (image) request.images.push_back(*image);
  request.temperature = temperature.value_or(config_.temperature);
  request.model_id = config_.model_id;
  calls_.fetch_add(1);
  return vlm_.query(request);
}

std::string infer_class(const std::string& description, VlmSession& session,
                        const PipelineConfig& config) {
  if (description.empty()) throw std::invalid_argument("description is empty");
  const std::string prompt = instantiate_prompt(config.prompts.class_prompt, description);
  std::string token = extract_class_token(session.ask(prompt, std::nullopt).text);
  if (!token.empty()) return token;
  token = extract_class_token(session.ask(prompt + kClassRetrySuffix, std::nullopt).text);
  if (!token.empty()) return token;
  throw std::runtime_error("class inference failed for description: " + description);
}

Verdict verify_box(const RasterImage& image, const Proposal& proposal, int proposal_index,
                   const std::string& description, VlmSession& session,
                   const PipelineConfig& config) {
  const RasterImage overlay = render_single_box(image, proposal.box, config.style);
  const std::string prompt = instantiate_prompt(config.prompts.verify_prompt, description);

  VlmReply reply = session.ask(prompt, overlay);
  std::optional<bool> parsed = parse_truefalse(reply.text);
  if (!parsed) {
    reply = session.ask(prompt + kVerifyRetrySuffix, overlay);
    parsed = parse_truefalse(reply.text);
  }
  if (!parsed) {
    warn("verification reply unparsable twice for proposal " + std::to_string(proposal_index) +
         "; recording False");
    return {false, reply.text, proposal_index};
  }
  return {*parsed, reply.text, proposal_index};
}

Decision decide(const std::vector<Verdict>& verdicts) {
  if (verdicts.empty()) throw std::invalid_argument("decide requires at least one verdict");
  Decision decision{Decision::Kind::NeedFallback, -1, {}};
  for (size_t i = 0; i < verdicts.size(); ++i)
    if (verdicts[i].value) decision.true_set.push_back(static_cast<int>(i));
  if (decision.true_set.size() == 1) {
    decision.kind = Decision::Kind::UniqueTrue;
    decision.unique_index = decision.true_set.front();
  } else if (decision.true_set.size() > 1) {
    decision.kind = Decision::Kind::NeedTieBreak;
  }
  return decision;
}

int tie_break(const RasterImage& image, const std::vector<Proposal>& proposals,
              const std::vector<int>& true_set, const std::string& description,
              VlmSession& session, const PipelineConfig& config) {
  if (true_set.size() < 2) throw std::invalid_argument("tie_break requires at least two candidates");
  const RasterImage overlay = render_indexed_boxes(image, boxes_of(proposals, true_set), config.style);
  const int n = static_cast<int>(true_set.size());
  const std::string prompt =
      instantiate_prompt(config.prompts.select_prompt, description, n);
  const VlmReply reply = session.ask(prompt, overlay);
  const IndexReply parsed = parse_index(reply.text, n);
  if (parsed.kind == IndexReply::Kind::Index)
    return true_set[static_cast<size_t>(parsed.index)];
  // No abstain branch here: every shown box already carries a True verdict.
  return true_set.front();
}

FallbackResult fallback_select(const RasterImage& image, const std::vector<Proposal>& proposals,
                               const std::string& description, VlmSession& session,
                               const PipelineConfig& config) {
  if (proposals.empty()) throw std::invalid_argument("fallback_select requires proposals");
  std::vector<int> all(proposals.size());
  std::iota(all.begin(), all.end(), 0);
  const RasterImage overlay = render_indexed_boxes(image, boxes_of(proposals, all), config.style);
  const int n = static_cast<int>(proposals.size());
  const std::string prompt =
      instantiate_prompt(config.prompts.select_prompt, description, n);

  IndexReply parsed = parse_index(session.ask(prompt, overlay).text, n);
  if (parsed.kind == IndexReply::Kind::Unparsable)
    parsed = parse_index(session.ask(prompt + kSelectRetrySuffix, overlay).text, n);

  switch (parsed.kind) {
    case IndexReply::Kind::Index: return {parsed.index, false};
    case IndexReply::Kind::None: return {std::nullopt, true};
    case IndexReply::Kind::Unparsable:
      warn("selection reply unparsable twice; abstaining");
      return {std::nullopt, false};
  }
  return {std::nullopt, false};
}

namespace {

// Runs verify_box for every proposal, optionally across worker threads.
// Results land in proposal-index slots, so the outcome is independent of the
// completion order.
std::vector<Verdict> verify_all(const RasterImage& image, const std::vector<Proposal>& proposals,
                                const std::string& description, VlmSession& session,
                                const PipelineConfig& config) {
  std::vector<Verdict> verdicts(proposals.size());
  const int workers =
      std::max(1, std::min<int>(config.verify_workers, static_cast<int>(proposals.size())));
  if (workers == 1) {
    for (size_t i = 0; i < proposals.size(); ++i)
      verdicts[i] = verify_box(image, proposals[i], static_cast<int>(i), description, session, config);
    return verdicts;
  }

  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= proposals.size()) return;
      try {
        verdicts[i] =
            verify_box(image, proposals[i], static_cast<int>(i), description, session, config);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return verdicts;
}

struct Prepared {
  DecisionTrace trace;
  bool empty = false;
};

// Steps shared by both variants: class inference and capped proposals.
Prepared prepare(const RasterImage& image, const std::string& description,
                 DetectorBackend& detector, VlmSession& session, const PipelineConfig& config) {
  config.prompts.validate();
  Prepared prep;
  try {
    prep.trace.inferred_class = infer_class(description, session, config);
  } catch (const TransportError& e) {
    prep.trace.vlm_calls = session.calls();
    throw PipelineError(PipelineError::Kind::Backend, e.what(), prep.trace);
  } catch (const ProtocolError& e) {
    prep.trace.vlm_calls = session.calls();
    throw PipelineError(PipelineError::Kind::Backend, e.what(), prep.trace);
  } catch (const std::runtime_error& e) {
    prep.trace.vlm_calls = session.calls();
    throw PipelineError(PipelineError::Kind::ClassInference, e.what(), prep.trace);
  }
  try {
    prep.trace.proposals = cap_proposals(
        detector.detect(image, config.image_id, prep.trace.inferred_class), config.proposal_cap);
  } catch (const std::exception& e) {
    prep.trace.vlm_calls = session.calls();
    throw PipelineError(PipelineError::Kind::Backend, e.what(), prep.trace);
  }
  prep.empty = prep.trace.proposals.empty();
  return prep;
}

RecOutcome abstain_no_proposals(DecisionTrace trace, int calls) {
  trace.vlm_calls = calls;
  RecOutcome outcome;
  outcome.box = std::nullopt;
  outcome.path = DecisionPath::NoProposals;
  outcome.trace = std::move(trace);
  return outcome;
}

}  // namespace

RecOutcome run_verification_first(const RasterImage& image, const std::string& description,
                                  DetectorBackend& detector, VlmBackend& vlm,
                                  const PipelineConfig& config) {
  VlmSession session(vlm, config);
  Prepared prep = prepare(image, description, detector, session, config);
  if (prep.empty) return abstain_no_proposals(std::move(prep.trace), session.calls());
  DecisionTrace& trace = prep.trace;

  RecOutcome outcome;
  try {
    trace.verdicts = verify_all(image, trace.proposals, description, session, config);
    const Decision decision = decide(trace.verdicts);
    trace.true_set = decision.true_set;

    switch (decision.kind) {
      case Decision::Kind::UniqueTrue:
        outcome.box = trace.proposals[static_cast<size_t>(decision.unique_index)].box;
        outcome.path = DecisionPath::UniqueTrue;
        break;
      case Decision::Kind::NeedTieBreak: {
        const int chosen =
            tie_break(image, trace.proposals, decision.true_set, description, session, config);
        trace.tie_break_choice = chosen;
        outcome.box = trace.proposals[static_cast<size_t>(chosen)].box;
        outcome.path = DecisionPath::TieBreak;
        break;
      }
      case Decision::Kind::NeedFallback: {
        const FallbackResult fb =
            fallback_select(image, trace.proposals, description, session, config);
        trace.fallback_choice = fb.index;
        trace.fallback_none = fb.replied_none;
        if (fb.index) {
          outcome.box = trace.proposals[static_cast<size_t>(*fb.index)].box;
          outcome.path = DecisionPath::Fallback;
        } else {
          outcome.box = std::nullopt;
          outcome.path = DecisionPath::AbstainNone;
        }
        break;
      }
    }
  } catch (const TransportError& e) {
    trace.vlm_calls = session.calls();
    throw PipelineError(PipelineError::Kind::Backend, e.what(), trace);
  } catch (const ProtocolError& e) {
    trace.vlm_calls = session.calls();
    throw PipelineError(PipelineError::Kind::Backend, e.what(), trace);
  }

  trace.vlm_calls = session.calls();
  outcome.trace = std::move(prep.trace);
  return outcome;
}

RecOutcome run_selection_baseline(const RasterImage& image, const std::string& description,
                                  DetectorBackend& detector, VlmBackend& vlm,
                                  const PipelineConfig& config, int votes) {
  if (votes != 1 && votes != 3)
    throw std::invalid_argument("selection baseline supports 1 or 3 votes");
  VlmSession session(vlm, config);
  Prepared prep = prepare(image, description, detector, session, config);
  if (prep.empty) return abstain_no_proposals(std::move(prep.trace), session.calls());
  DecisionTrace& trace = prep.trace;

  RecOutcome outcome;
  try {
    const int n = static_cast<int>(trace.proposals.size());
    std::vector<int> all(trace.proposals.size());
    std::iota(all.begin(), all.end(), 0);
    const RasterImage overlay =
        render_indexed_boxes(image, boxes_of(trace.proposals, all), config.style);
    const std::string prompt =
        instantiate_prompt(config.prompts.select_prompt, description, n);

    std::optional<int> winner;
    bool saw_none = false;
    if (votes == 1) {
      IndexReply parsed = parse_index(session.ask(prompt, overlay).text, n);
      if (parsed.kind == IndexReply::Kind::Unparsable)
        parsed = parse_index(session.ask(prompt + kSelectRetrySuffix, overlay).text, n);
      if (parsed.kind == IndexReply::Kind::Index) winner = parsed.index;
      saw_none = parsed.kind == IndexReply::Kind::None;
    } else {
      // Majority voting runs at temperature 1.0 so the three draws vary.
      std::vector<int> tally(trace.proposals.size(), 0);
      for (int v = 0; v < votes; ++v) {
        const IndexReply parsed = parse_index(session.ask(prompt, overlay, 1.0).text, n);
        if (parsed.kind == IndexReply::Kind::Index) ++tally[static_cast<size_t>(parsed.index)];
        if (parsed.kind == IndexReply::Kind::None) saw_none = true;
      }
      // Most votes wins; vote-count ties resolve to the lowest index.
      int best = -1;
      for (size_t i = 0; i < tally.size(); ++i)
        if (tally[i] > 0 && (best < 0 || tally[i] > tally[static_cast<size_t>(best)]))
          best = static_cast<int>(i);
      if (best >= 0) winner = best;
    }

    trace.fallback_choice = winner;
    trace.fallback_none = !winner && saw_none;
    if (winner) {
      outcome.box = trace.proposals[static_cast<size_t>(*winner)].box;
      outcome.path = DecisionPath::Fallback;
    } else {
      outcome.box = std::nullopt;
      outcome.path = DecisionPath::AbstainNone;
    }
  } catch (const TransportError& e) {
    trace.vlm_calls = session.calls();
    throw PipelineError(PipelineError::Kind::Backend, e.what(), trace);
  } catch (const ProtocolError& e) {
    trace.vlm_calls = session.calls();
    throw PipelineError(PipelineError::Kind::Backend, e.what(), trace);
  }

  trace.vlm_calls = session.calls();
  outcome.trace = std::move(prep.trace);
  return outcome;
}

nlohmann::ordered_json outcome_to_json(const RecOutcome& outcome) {
  nlohmann::ordered_json j;
  if (outcome.box) {
    j["result"] = {{"type", "box"},
                   {"box",
                    {{"x_min", outcome.box->x_min},
                     {"y_min", outcome.box->y_min},
                     {"x_max", outcome.box->x_max},
                     {"y_max", outcome.box->y_max}}}};
  } else {
    j["result"] = {{"type", "abstain"}};
  }
  j["path"] = to_string(outcome.path);

  const DecisionTrace& t = outcome.trace;
  nlohmann::ordered_json jt;
  jt["inferred_class"] = t.inferred_class;
  jt["proposals"] = nlohmann::ordered_json::array();
  for (const auto& p : t.proposals)
    jt["proposals"].push_back({{"box",
                                {{"x_min", p.box.x_min},
                                 {"y_min", p.box.y_min},
                                 {"x_max", p.box.x_max},
                                 {"y_max", p.box.y_max}}},
                               {"class_name", p.class_name},
                               {"confidence", p.confidence}});
  jt["verdicts"] = nlohmann::ordered_json::array();
  for (const auto& v : t.verdicts)
    jt["verdicts"].push_back(
        {{"proposal_index", v.proposal_index}, {"value", v.value}, {"raw_reply", v.raw_reply}});
  jt["true_set"] = t.true_set;
  jt["tie_break_choice"] =
      t.tie_break_choice ? nlohmann::ordered_json(*t.tie_break_choice) : nlohmann::ordered_json();
  if (t.fallback_choice)
    jt["fallback_choice"] = *t.fallback_choice;
  else if (t.fallback_none)
    jt["fallback_choice"] = "none";
  else
    jt["fallback_choice"] = nullptr;
  jt["vlm_calls"] = t.vlm_calls;
  j["trace"] = jt;
  return j;
}

}  // namespace refverify
