#include "mad/service.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <sstream>

#include "text.hpp"

namespace mad::service {

namespace {

bool valid_token(std::string_view s) {
  if (s.empty()) return false;
  return std::none_of(s.begin(), s.end(),
                      [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\0'; });
}

std::string errno_text() { return std::strerror(errno); }

}  // namespace

std::string format_record(const VoteRecord& r, const TaxonomyGraph& graph) {
  std::string line = std::to_string(r.timestamp_ms);
  line += ' ';
  line += r.annotator;
  line += ' ';
  line += r.image;
  line += r.answer_a ? " 1" : " 0";
  line += r.answer_b ? " 1" : " 0";
  line += r.difficulty ? " 1 " : " 0 ";
  line += graph.label_key(r.label_a);
  line += ' ';
  line += graph.label_key(r.label_b);
  return line;
}

VoteRecord parse_record(std::string_view line, const TaxonomyGraph& graph) {
  const auto f = detail::split_ws(line);
  if (f.size() != 8) throw Error("vote log: expected 8 fields, got " + std::to_string(f.size()));
  const auto flag = [&](std::size_t i) {
    if (f[i] == "0") return false;
    if (f[i] == "1") return true;
    throw Error("vote log: expected 0 or 1, got '" + std::string(f[i]) + "'");
  };
  const auto label = [&](std::size_t i) {
    auto id = graph.find_label(f[i]);
    if (!id) throw Error("vote log: unknown label '" + std::string(f[i]) + "'");
    return *id;
  };
  const auto ts = detail::parse_int<std::int64_t>(f[0]);
  if (!ts) throw Error("vote log: bad timestamp '" + std::string(f[0]) + "'");
  VoteRecord r{*ts, std::string(f[1]), std::string(f[2]), flag(3), flag(4), flag(5), label(6), label(7)};
  if (!(r.label_a < r.label_b)) throw Error("vote log: question labels out of order");
  return r;
}

// ---------------------------------------------------------------------------

SessionState::SessionState(std::vector<std::string> models, std::vector<PairSubset> subsets, VotingRule rule)
    : models_(std::move(models)), subsets_(std::move(subsets)), rule_(rule), resolved_(subsets_.size()) {
  for (std::size_t s = 0; s < subsets_.size(); ++s) {
    const std::vector<std::size_t> initial(subsets_[s].selected().begin(), subsets_[s].selected().end());
    for (std::size_t pos : initial) attach(s, pos);
  }
}

std::optional<std::size_t> SessionState::find_query(const QueryKey& key) const {
  auto it = query_index_.find(key);
  if (it == query_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> SessionState::open_queries(std::string_view image) const {
  std::vector<std::size_t> out;
  for (auto it = query_index_.lower_bound(QueryKey{std::string(image), {}, {}});
       it != query_index_.end() && it->first.image == image; ++it) {
    if (!queries_[it->second].finalized) out.push_back(it->second);
  }
  return out;
}

bool SessionState::has_voted(std::size_t query, std::string_view annotator) const {
  const auto& votes = queries_.at(query).votes;
  return std::any_of(votes.begin(), votes.end(), [&](const AnnotationVote& v) { return v.annotator == annotator; });
}

void SessionState::attach(std::size_t s, std::size_t pos) {
  const LabelQuery q = make_query(subsets_[s], pos);
  if (auto v = answers_.derive(q)) {
    resolve(s, pos, std::move(*v));
    return;
  }
  QueryKey key{q.image, std::min(q.question_a, q.question_b), std::max(q.question_a, q.question_b)};
  if (auto it = query_index_.find(key); it != query_index_.end()) {
    Query& existing = queries_[it->second];
    if (!existing.finalized) {
      existing.waiting.emplace_back(s, pos);
      return;
    }
    // Finalized as a discard while other answers for the image were known,
    // so the cache could not mark the whole image.
    resolve(
        s, pos,
        LabelVerdict{q.image, q.pair, q.question_a, q.question_b, Outcome::kDiscarded, false, false, existing.votes});
    return;
  }
  query_index_.emplace(key, queries_.size());
  queries_.push_back(Query{std::move(key), {}, false, {}, {{s, pos}}});
}

void SessionState::resolve(std::size_t s, std::size_t pos, LabelVerdict verdict) {
  const bool discarded = verdict.outcome == Outcome::kDiscarded;
  const std::string image = verdict.image;
  resolved_[s].emplace(pos, std::move(verdict));
  if (!discarded) return;
  subsets_[s].discard(image);
  if (auto next = subsets_[s].next_replacement()) attach(s, *next);
}

std::vector<LabelVerdict> SessionState::apply(const VoteRecord& r) {
  const QueryKey key{r.image, r.label_a, r.label_b};
  const auto idx = find_query(key);
  if (!idx) throw Error("session: vote for unknown query on image " + r.image);
  if (queries_[*idx].finalized) throw Error("session: vote for finalized query on image " + r.image);
  if (has_voted(*idx, r.annotator))
    throw Error("session: annotator " + r.annotator + " already voted on image " + r.image);

  queries_[*idx].votes.push_back(AnnotationVote{r.annotator, r.image, r.answer_a, r.answer_b, r.difficulty});
  ++vote_count_;
  if (queries_[*idx].votes.size() < rule_.quorum) return {};

  Query& q = queries_[*idx];
  q.finalized = true;
  q.result = aggregate_answers(q.votes, rule_);
  LabelVerdict settled{
      r.image,
      {},
      r.label_a,
      r.label_b,
      q.result.discarded ? Outcome::kDiscarded : outcome_from_answers(q.result.answer_a, q.result.answer_b),
      q.result.answer_a,
      q.result.answer_b,
      q.votes};
  answers_.record(settled);

  // attach() below may grow queries_, so copy what is needed first.
  const auto waiting = std::move(q.waiting);
  q.waiting.clear();
  const auto votes = q.votes;
  const bool discarded = q.result.discarded;

  std::vector<LabelVerdict> out;
  for (auto [s, pos] : waiting) {
    const LabelQuery lq = make_query(subsets_[s], pos);
    LabelVerdict v;
    if (discarded) {
      v = LabelVerdict{lq.image, lq.pair, lq.question_a, lq.question_b, Outcome::kDiscarded, false, false, votes};
    } else {
      // Settled answers take precedence over this query's majority.
      auto derived = answers_.derive(lq);
      if (!derived) throw Error("session: internal error deriving verdict for " + lq.image);
      v = std::move(*derived);
      v.votes = votes;
    }
    out.push_back(v);
    resolve(s, pos, std::move(v));
  }
  return out;
}

std::map<ModelPair, std::vector<LabelVerdict>> SessionState::verdicts() const {
  std::map<ModelPair, std::vector<LabelVerdict>> out;
  for (std::size_t s = 0; s < subsets_.size(); ++s) {
    auto& list = out[subsets_[s].pair()];
    for (const auto& [pos, v] : resolved_[s]) list.push_back(v);
  }
  return out;
}

std::vector<PairProgress> SessionState::progress() const {
  std::vector<PairProgress> out;
  for (std::size_t s = 0; s < subsets_.size(); ++s) {
    PairProgress p{subsets_[s].pair()};
    for (std::size_t pos : subsets_[s].selected()) {
      if (!resolved_[s].contains(pos)) ++p.pending;
    }
    for (const auto& [pos, v] : resolved_[s]) {
      if (v.outcome == Outcome::kDiscarded) {
        ++p.discarded;
      } else {
        ++p.finalized;
      }
    }
    p.exhausted = subsets_[s].short_of_k();
    out.push_back(p);
  }
  return out;
}

bool SessionState::complete() const {
  for (std::size_t s = 0; s < subsets_.size(); ++s) {
    for (std::size_t pos : subsets_[s].selected()) {
      if (!resolved_[s].contains(pos)) return false;
    }
  }
  return true;
}

std::string SessionState::digest() const {
  std::ostringstream out;
  out << "votes " << vote_count_ << '\n';
  for (const Query& q : queries_) {
    out << "query " << q.key.image << ' ' << q.key.label_a.value << ' ' << q.key.label_b.value
        << (q.finalized ? " final" : " open");
    for (const auto& v : q.votes) out << ' ' << v.annotator << ':' << v.answer_a << v.answer_b << v.difficulty;
    for (auto [s, pos] : q.waiting) out << " w" << s << '.' << pos;
    out << '\n';
  }
  for (std::size_t s = 0; s < subsets_.size(); ++s) {
    const PairSubset& sub = subsets_[s];
    out << "pair " << sub.pair().first << ' ' << sub.pair().second << " cursor " << sub.cursor() << " selected";
    for (std::size_t pos : sub.selected()) out << ' ' << pos;
    out << " discarded";
    for (std::size_t pos : sub.discarded()) out << ' ' << pos;
    out << '\n';
    for (const auto& [pos, v] : resolved_[s])
      out << "  " << pos << ' ' << v.image << ' ' << outcome_token(v.outcome) << ' ' << v.answer_a << v.answer_b
          << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

VoteLog::VoteLog(std::filesystem::path path, Durability durability) : path_(std::move(path)), durability_(durability) {
  fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error("vote log: cannot open " + path_.string() + ": " + errno_text());
}

VoteLog::~VoteLog() {
  if (fd_ >= 0) ::close(fd_);
}

std::vector<std::string> VoteLog::recover() {
  std::string content;
  char buf[1 << 16];
  if (::lseek(fd_, 0, SEEK_SET) < 0) throw Error("vote log: seek failed: " + errno_text());
  for (;;) {
    const ssize_t n = ::read(fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("vote log: read failed on " + path_.string() + ": " + errno_text());
    }
    if (n == 0) break;
    content.append(buf, static_cast<std::size_t>(n));
  }
  const std::size_t keep = content.rfind('\n') == std::string::npos ? 0 : content.rfind('\n') + 1;
  if (keep != content.size()) {
    if (::ftruncate(fd_, static_cast<off_t>(keep)) != 0)
      throw Error("vote log: cannot truncate partial record in " + path_.string() + ": " + errno_text());
    if (durability_ == Durability::kFsync) ::fdatasync(fd_);
    content.resize(keep);
  }
  std::vector<std::string> lines;
  for (auto part : detail::split(content, '\n')) {
    if (!detail::trim(part).empty()) lines.emplace_back(part);
  }
  return lines;
}

void VoteLog::append(const std::string& line) {
  const std::string data = line + '\n';
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd_, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("vote log: write failed on " + path_.string() + ": " + errno_text());
    }
    done += static_cast<std::size_t>(n);
  }
  if (durability_ == Durability::kFsync && ::fdatasync(fd_) != 0)
    throw Error("vote log: fdatasync failed on " + path_.string() + ": " + errno_text());
}

// ---------------------------------------------------------------------------

AnnotationService::AnnotationService(std::vector<std::string> models, std::vector<PairSubset> subsets,
                                     const TaxonomyGraph& graph, std::filesystem::path log_path, ServiceConfig config)
    : graph_(graph),
      models_(models),
      config_(std::move(config)),
      state_(std::move(models), std::move(subsets), config_.voting),
      log_(std::move(log_path), config_.durability),
      annotators_(config_.annotators.begin(), config_.annotators.end()) {
  std::size_t line_no = 0;
  for (const auto& line : log_.recover()) {
    ++line_no;
    try {
      state_.apply(parse_record(line, graph_));
    } catch (const Error& e) {
      throw Error(log_.path().string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::int64_t AnnotationService::now() const {
  if (config_.clock) return config_.clock();
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void AnnotationService::expire_leases(std::int64_t t) {
  std::erase_if(leases_, [&](const auto& entry) {
    return entry.second.expires_ms <= t || state_.queries()[entry.second.query].finalized;
  });
}

std::size_t AnnotationService::active_leases(std::size_t query, std::string_view except) const {
  std::size_t n = 0;
  for (const auto& [who, lease] : leases_) {
    if (lease.query == query && who != except) ++n;
  }
  return n;
}

std::optional<Assignment> AnnotationService::next_query(const std::string& annotator) {
  std::lock_guard lock(mutex_);
  if (!valid_token(annotator)) throw ServiceError(ServiceError::Kind::kBadRequest, "invalid annotator id");
  if (!config_.annotators.empty() && !annotators_.contains(annotator))
    throw ServiceError(ServiceError::Kind::kUnknownAnnotator, "unknown annotator " + annotator);

  const std::int64_t t = now();
  expire_leases(t);
  const auto queries = state_.queries();
  const auto to_assignment = [&](std::size_t idx) {
    return Assignment{queries[idx].key.image, queries[idx].key.label_a, queries[idx].key.label_b};
  };

  if (auto it = leases_.find(annotator); it != leases_.end()) {
    it->second.expires_ms = t + config_.lease.count();
    return to_assignment(it->second.query);
  }

  // Prefer queries closest to quorum so verdicts finalize early.
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& q = queries[i];
    if (q.finalized || state_.has_voted(i, annotator)) continue;
    if (q.votes.size() + active_leases(i, annotator) >= config_.voting.quorum) continue;
    if (!best || q.votes.size() > queries[*best].votes.size()) best = i;
  }
  if (!best) return std::nullopt;
  leases_[annotator] = Lease{*best, t + config_.lease.count()};
  return to_assignment(*best);
}

VoteAck AnnotationService::submit_vote(const VoteRequest& req) {
  std::lock_guard lock(mutex_);
  using Kind = ServiceError::Kind;
  if (!valid_token(req.annotator)) throw ServiceError(Kind::kBadRequest, "invalid annotator id");
  if (!valid_token(req.image)) throw ServiceError(Kind::kBadRequest, "invalid image id");
  if (!config_.annotators.empty() && !annotators_.contains(req.annotator))
    throw ServiceError(Kind::kUnknownAnnotator, "unknown annotator " + req.annotator);

  const std::int64_t t = now();
  bool answer_a = req.answer_a;
  bool answer_b = req.answer_b;

  std::optional<std::size_t> target;
  if (req.questions) {
    auto [qa, qb] = *req.questions;
    if (qa == qb) throw ServiceError(Kind::kBadRequest, "the two questions must differ");
    if (qb < qa) {
      std::swap(qa, qb);
      std::swap(answer_a, answer_b);
    }
    target = state_.find_query(QueryKey{req.image, qa, qb});
    if (!target) throw ServiceError(Kind::kBadRequest, "no query for image " + req.image + " with those questions");
  } else if (auto it = leases_.find(req.annotator);
             it != leases_.end() && state_.queries()[it->second.query].key.image == req.image) {
    target = it->second.query;
  } else {
    // No lease for this image: it is a retry of an acknowledged vote if the
    // annotator already voted on a query of this image.
    for (std::size_t i = 0; i < state_.queries().size(); ++i) {
      if (state_.queries()[i].key.image == req.image && state_.has_voted(i, req.annotator)) {
        target = i;
        break;
      }
    }
    if (!target) throw ServiceError(Kind::kNoLease, "no active lease for " + req.annotator + " on image " + req.image);
  }

  if (state_.has_voted(*target, req.annotator))
    throw ServiceError(Kind::kDuplicate, req.annotator + " already voted on image " + req.image);

  expire_leases(t);
  auto lease = leases_.find(req.annotator);
  if (lease == leases_.end() || lease->second.query != *target)
    throw ServiceError(Kind::kNoLease, "no active lease for " + req.annotator + " on image " + req.image);

  const auto& key = state_.queries()[*target].key;
  const VoteRecord record{t, req.annotator, req.image, answer_a, answer_b, req.difficulty, key.label_a, key.label_b};
  log_.append(format_record(record, graph_));
  VoteAck ack{state_.apply(record)};
  leases_.erase(lease);
  return ack;
}

std::vector<PairProgress> AnnotationService::progress() const {
  std::lock_guard lock(mutex_);
  return state_.progress();
}

CompetitionState AnnotationService::ranking_snapshot() const {
  std::lock_guard lock(mutex_);
  std::map<ModelPair, PairTally> tallies;
  for (const auto& [pair, list] : state_.verdicts()) tallies[pair] = tally_verdicts(list);
  CompetitionState out = assemble_state(models_, std::move(tallies), config_.ranking, true);
  out.partial = !state_.complete();
  return out;
}

std::map<ModelPair, std::vector<LabelVerdict>> AnnotationService::verdicts() const {
  std::lock_guard lock(mutex_);
  return state_.verdicts();
}

bool AnnotationService::complete() const {
  std::lock_guard lock(mutex_);
  return state_.complete();
}

std::string AnnotationService::digest() const {
  std::lock_guard lock(mutex_);
  return state_.digest();
}

std::size_t AnnotationService::vote_count() const {
  std::lock_guard lock(mutex_);
  return state_.vote_count();
}

}  // namespace mad::service
