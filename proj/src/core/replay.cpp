// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 the rpdmon authors

#include "replay.hpp"

#include <ostream>

namespace rpdmon::lab {

ReplayResult replay(const trace::Trace& t, const PolicyConfig& cfg, bool collect_series) {
  cfg.validate();
  ReplayResult result;
  session::Session sess("", cfg);

  for (const auto& rec : t.records) {
    if (rec.phase != trace::TokenPhase::Thinking) break;
    entropy::TokenObservation obs;
    obs.step = rec.step;
    obs.token_id = rec.token_id.value_or(-1);
    obs.token_text = rec.token_text;
    obs.entropy_nats = trace::record_entropy(rec, cfg.tail_policy);

    const session::Action action = sess.feed(obs);
    result.thinking_tokens += 1;

    // The marker token that finishes the session is never monitored, so the
    // series covers observed steps only.
    if (action.kind != session::ActionKind::Finish && collect_series) {
      StepStat s;
      s.step = sess.mon().step();
      s.entropy = obs.entropy_nats;
      s.ltf = sess.mon().ltf();
      s.gtf = sess.mon().gtf();
      s.rpdi = sess.mon().rpdi();
      result.series.push_back(s);
    }
    if (sess.outcome().kind != session::OutcomeKind::Pending) break;
  }

  if (sess.outcome().kind == session::OutcomeKind::Pending) {
    sess.finish_input();
  }
  result.outcome = sess.outcome();
  return result;
}

void write_series_csv(const ReplayResult& r, std::ostream& out) {
  out << "step,entropy,ltf,gtf,rpdi\n";
  char buf[160];
  for (const auto& s : r.series) {
    if (s.rpdi) {
      std::snprintf(buf, sizeof(buf), "%llu,%.12g,%.12g,%.12g,%.12g\n",
                    static_cast<unsigned long long>(s.step), s.entropy, s.ltf, s.gtf, *s.rpdi);
    } else {
      std::snprintf(buf, sizeof(buf), "%llu,%.12g,%.12g,%.12g,\n",
                    static_cast<unsigned long long>(s.step), s.entropy, s.ltf, s.gtf);
    }
    out << buf;
  }
}

}  // namespace rpdmon::lab
