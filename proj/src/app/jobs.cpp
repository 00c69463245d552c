#include "plateflow/app/jobs.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "plateflow/app/config.hpp"
#include "plateflow/eval/scoring.hpp"
#include "plateflow/image_io.hpp"

namespace plateflow::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ServiceError not_found(const std::string& what) { return {"not_found", 404, what}; }
ServiceError conflict(const std::string& what) { return {"conflict", 409, what}; }
ServiceError invalid(const std::string& what) { return {"invalid", 400, what}; }

std::string candidate_url(const std::string& job, int k, int r) {
  return "/api/v1/instances/" + job + "/" + std::to_string(k) + "/candidates/" + std::to_string(r) + ".png";
}

json ocr_json(const ocr::OcrResult& r) {
  json out{{"text", r.text}, {"normalized", ocr::normalize_bangla(r.text)}, {"confidence", nullptr}};
  if (r.confidence) out["confidence"] = *r.confidence;
  return out;
}

json merge(json base, const json& over) {
  for (auto it = over.begin(); it != over.end(); ++it) base[it.key()] = it.value();
  return base;
}

}  // namespace

std::string to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Queued:
      return "queued";
    case JobStatus::Running:
      return "running";
    case JobStatus::Done:
      return "done";
    case JobStatus::Failed:
      return "failed";
  }
  return "failed";
}

JobStatus job_status_from_string(const std::string& s) {
  if (s == "queued") return JobStatus::Queued;
  if (s == "running") return JobStatus::Running;
  if (s == "done") return JobStatus::Done;
  if (s == "failed") return JobStatus::Failed;
  throw std::invalid_argument("unknown job status " + s);
}

json record_to_json(const ReviewRecord& r) {
  return {{"v", 1},
          {"job_id", r.job_id},
          {"instance_id", r.instance_id},
          {"chosen_rank", r.chosen_rank},
          {"ocr_text", r.ocr_text},
          {"ocr_text_normalized", r.ocr_text_normalized},
          {"decision", r.decision == Decision::Saved ? "saved" : "deleted"},
          {"timestamp", r.timestamp}};
}

ReviewRecord record_from_json(const json& doc) {
  ReviewRecord r;
  r.job_id = doc.at("job_id").get<std::string>();
  r.instance_id = doc.at("instance_id").get<int>();
  r.chosen_rank = doc.at("chosen_rank").get<int>();
  r.ocr_text = doc.at("ocr_text").get<std::string>();
  r.ocr_text_normalized = doc.at("ocr_text_normalized").get<std::string>();
  const auto d = doc.at("decision").get<std::string>();
  if (d != "saved" && d != "deleted") throw std::invalid_argument("unknown decision " + d);
  r.decision = d == "saved" ? Decision::Saved : Decision::Deleted;
  r.timestamp = doc.at("timestamp").get<std::string>();
  return r;
}

ResultsStore::ResultsStore(fs::path path) : path_(std::move(path)) {}

void ResultsStore::append(const ReviewRecord& record) {
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << record_to_json(record).dump() << '\n';
  out.flush();
  if (!out) throw ServiceError("storage", 500, "cannot append to " + path_.string());
}

std::vector<ReviewRecord> ResultsStore::replay() const {
  std::lock_guard lock(mu_);
  std::vector<ReviewRecord> out;
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception&) {
      if (in.peek() != EOF) throw ServiceError("storage", 500, path_.string() + ": corrupt record");
    }
  }
  return out;
}

ServiceOptions service_options_from_env(const std::string& data_dir, const std::string& ocr_url) {
  ServiceOptions o;
  const char* env_data = std::getenv("PLATEFLOW_DATA_DIR");
  o.data_dir = !data_dir.empty() ? fs::path(data_dir) : env_data ? fs::path(env_data) : fs::path("plateflow-data");
  const char* env_ocr = std::getenv("PLATEFLOW_OCR_URL");
  const std::string url = !ocr_url.empty() ? ocr_url : env_ocr ? std::string(env_ocr) : std::string();
  if (!url.empty()) {
    ocr::OcrEndpoint ep;
    ep.base_url = url;
    o.ocr = std::make_shared<ocr::HttpOcrClient>(ep);
  }
  return o;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

JobService::JobService(ServiceOptions options)
    : options_(std::move(options)), store_(options_.data_dir / "results.jsonl") {
  if (options_.workers < 1) throw std::invalid_argument("workers must be >= 1");
  fs::create_directories(options_.data_dir / "jobs");
  fs::create_directories(options_.data_dir / "uploads");
  load_existing();
  for (int i = 0; i < options_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobService::~JobService() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : workers_) t.join();
}

void JobService::load_existing() {
  for (const auto& entry : fs::directory_iterator(options_.data_dir / "jobs")) {
    const auto file = entry.path() / "job.json";
    if (!fs::exists(file)) continue;
    Job job;
    try {
      const auto doc = json::parse(io::read_text(file));
      auto& s = job.snap;
      s.job_id = doc.at("job_id").get<std::string>();
      s.status = job_status_from_string(doc.at("status").get<std::string>());
      s.stream_id = doc.at("stream_id").get<std::string>();
      s.stream_dir = doc.at("stream_dir").get<std::string>();
      s.frames_processed = doc.value("frames_processed", 0);
      s.frames_total = doc.value("frames_total", 0);
      s.instances = doc.value("instances", 0);
      s.error = doc.value("error", std::string());
      s.created_at = doc.value("created_at", std::string());
      s.config = doc.value("config", json::object());
      job.output_dir = entry.path() / s.stream_id;
      if (s.status == JobStatus::Queued || s.status == JobStatus::Running) {
        s.status = JobStatus::Failed;
        s.error = "interrupted by a service restart";
        write_job_file(job);
      }
      if (s.status == JobStatus::Done) job.result = pipeline::load_instances(job.output_dir / "instances.json");
      if (fs::exists(s.stream_dir / "annotations.json")) {
        job.annotation = eval::load_annotation(s.stream_dir / "annotations.json");
      }
    } catch (const std::exception&) {
      continue;
    }
    const auto& id = job.snap.job_id;
    const auto dash = id.find('-');
    if (dash != std::string::npos) {
      next_id_ = std::max<std::uint64_t>(next_id_, std::strtoull(id.c_str() + dash + 1, nullptr, 10) + 1);
    }
    jobs_.emplace(id, std::move(job));
  }
  for (const auto& r : store_.replay()) {
    auto it = jobs_.find(r.job_id);
    if (it == jobs_.end()) continue;
    auto& review = it->second.reviews[r.instance_id];
    review.chosen_rank = r.chosen_rank;
    (r.decision == Decision::Saved ? review.saved : review.deleted) = r;
  }
}

void JobService::write_job_file(const Job& job) const {
  const auto& s = job.snap;
  json doc{{"v", 1},
           {"job_id", s.job_id},
           {"status", to_string(s.status)},
           {"stream_id", s.stream_id},
           {"stream_dir", s.stream_dir.string()},
           {"frames_processed", s.frames_processed},
           {"frames_total", s.frames_total},
           {"instances", s.instances},
           {"created_at", s.created_at},
           {"config", s.config}};
  if (!s.error.empty()) doc["error"] = s.error;
  const auto dir = options_.data_dir / "jobs" / s.job_id;
  try {
    fs::create_directories(dir);
    io::write_text(dir / "job.json.tmp", doc.dump(2) + "\n");
    fs::rename(dir / "job.json.tmp", dir / "job.json");
  } catch (const std::exception& e) {
    throw ServiceError("storage", 500, e.what());
  }
}

std::string JobService::submit(const JobRequest& request) {
  const auto stream_dir = fs::absolute(request.stream_dir);
  pipeline::StreamInfo info;
  try {
    info = pipeline::read_stream_info(stream_dir);
  } catch (const std::exception& e) {
    throw ServiceError("invalid_stream", 400, e.what());
  }
  const auto config_doc = merge(options_.default_config, request.config);
  pipeline::PipelineConfig config;
  try {
    config = pipeline_config_from_json(config_doc, options_.data_dir);
  } catch (const std::exception& e) {
    throw ServiceError("invalid_config", 400, e.what());
  }
  std::optional<eval::VideoAnnotation> annotation;
  if (fs::exists(stream_dir / "annotations.json")) {
    try {
      annotation = eval::load_annotation(stream_dir / "annotations.json");
    } catch (const std::exception& e) {
      throw ServiceError("invalid_stream", 400, e.what());
    }
  }
  if (config.backbone.kind == detect::DetectorConfig::Kind::Oracle && !annotation) {
    throw ServiceError("invalid_stream", 400, "the oracle backbone needs annotations.json in the stream directory");
  }

  std::unique_lock lock(mu_);
  char id[64];
  std::snprintf(id, sizeof id, "job-%06llu-%08x", static_cast<unsigned long long>(next_id_++),
                static_cast<unsigned>(std::random_device{}()));
  Job job;
  job.snap.job_id = id;
  job.snap.stream_dir = stream_dir;
  job.snap.stream_id = annotation ? annotation->stream_id : stream_dir.filename().string();
  if (job.snap.stream_id.empty()) job.snap.stream_id = "stream";
  job.snap.frames_total = info.frames;
  job.snap.created_at = utc_timestamp();
  job.snap.config = config_doc;
  job.annotation = std::move(annotation);
  job.output_dir = options_.data_dir / "jobs" / id / job.snap.stream_id;
  write_job_file(job);
  jobs_.emplace(id, std::move(job));
  queue_.push_back(id);
  lock.unlock();
  cv_.notify_all();
  return id;
}

fs::path JobService::stage_upload(const std::vector<std::pair<std::string, std::string>>& files) {
  static const std::regex plain_name("[A-Za-z0-9_][A-Za-z0-9._-]*");
  if (files.empty()) throw invalid("upload has no files");
  for (const auto& [name, _] : files) {
    if (!std::regex_match(name, plain_name)) throw invalid("upload file name '" + name + "' is not allowed");
  }
  char token[32];
  std::snprintf(token, sizeof token, "upload-%016llx",
                (static_cast<unsigned long long>(std::random_device{}()) << 32) ^ std::random_device{}());
  const auto dir = options_.data_dir / "uploads" / token;
  try {
    fs::create_directories(dir);
    for (const auto& [name, content] : files) io::write_text(dir / name, content);
  } catch (const std::exception& e) {
    throw ServiceError("storage", 500, e.what());
  }
  return dir;
}

void JobService::worker_loop() {
  while (true) {
    std::string id;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
    }
    run_job(id);
  }
}

void JobService::run_job(const std::string& job_id) {
  fs::path stream_dir;
  json config_doc;
  std::optional<eval::VideoAnnotation> annotation;
  pipeline::RunOptions opts;
  {
    std::lock_guard lock(mu_);
    auto& job = find_locked(job_id);
    job.snap.status = JobStatus::Running;
    write_job_file(job);
    stream_dir = job.snap.stream_dir;
    config_doc = job.snap.config;
    annotation = job.annotation;
    opts.stream_id = job.snap.stream_id;
    opts.output_root = job.output_dir.parent_path();
  }
  cv_.notify_all();
  opts.on_progress = [this, job_id](const pipeline::Progress& p) {
    std::lock_guard lock(mu_);
    auto& snap = find_locked(job_id).snap;
    snap.frames_processed = std::max(snap.frames_processed, p.frames_processed);
    snap.instances = p.instances;
  };
  pipeline::StreamResult result;
  std::string error;
  try {
    auto config = pipeline_config_from_json(config_doc, options_.data_dir);
    pipeline::DirectoryFrameSource source(stream_dir);
    result = pipeline::process_stream(source, config, annotation ? &*annotation : nullptr, opts);
    if (result.incomplete) error = result.error.empty() ? "stream processing incomplete" : result.error;
  } catch (const std::exception& e) {
    error = e.what();
  }
  {
    std::lock_guard lock(mu_);
    auto& job = find_locked(job_id);
    for (auto& inst : result.instances)
      for (auto& c : inst.candidates) c.crop = Image{};
    job.result = std::move(result);
    job.snap.instances = static_cast<int>(job.result.instances.size());
    job.snap.frames_processed = std::max(job.snap.frames_processed, job.result.frames_processed);
    job.snap.status = error.empty() ? JobStatus::Done : JobStatus::Failed;
    job.snap.error = error;
    write_job_file(job);
  }
  cv_.notify_all();
}

JobService::Job& JobService::find_locked(const std::string& job_id) {
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw not_found("no job " + job_id);
  return it->second;
}

const JobService::Job& JobService::find_locked(const std::string& job_id) const {
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw not_found("no job " + job_id);
  return it->second;
}

const pipeline::PlateInstance& JobService::done_instance_locked(const Job& job, int instance_id) const {
  if (job.snap.status != JobStatus::Done) throw ServiceError("not_ready", 409, "job " + job.snap.job_id + " is not done");
  for (const auto& inst : job.result.instances) {
    if (inst.instance_id == instance_id) return inst;
  }
  throw not_found("job " + job.snap.job_id + " has no instance " + std::to_string(instance_id));
}

JobSnapshot JobService::get(const std::string& job_id) const {
  std::lock_guard lock(mu_);
  return find_locked(job_id).snap;
}

JobSnapshot JobService::wait(const std::string& job_id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] {
    const auto s = find_locked(job_id).snap.status;
    return s == JobStatus::Done || s == JobStatus::Failed;
  });
  return find_locked(job_id).snap;
}

json JobService::instance_view_locked(const Job& job, const pipeline::PlateInstance& inst) const {
  const std::string& id = job.snap.job_id;
  auto rit = job.reviews.find(inst.instance_id);
  const Review empty;
  const Review& review = rit == job.reviews.end() ? empty : rit->second;
  json cands = json::array();
  for (std::size_t k = 0; k < inst.candidates.size(); ++k) {
    const auto& c = inst.candidates[k];
    const int rank = static_cast<int>(k) + 1;
    json cj{{"rank", rank},
            {"frame_index", c.detection.frame_index},
            {"confidence", c.detection.confidence},
            {"box", {{"x", c.detection.box.x}, {"y", c.detection.box.y}, {"w", c.detection.box.w}, {"h", c.detection.box.h}}},
            {"url", candidate_url(id, inst.instance_id, rank)},
            {"ocr", nullptr}};
    if (auto o = review.ocr.find(rank); o != review.ocr.end()) cj["ocr"] = ocr_json(o->second);
    if (auto e = review.ocr_errors.find(rank); e != review.ocr_errors.end()) cj["ocr_error"] = e->second;
    cands.push_back(std::move(cj));
  }
  json out{{"id", inst.instance_id},
           {"first_frame", inst.first_frame},
           {"last_frame", inst.last_frame},
           {"chosen_rank", review.chosen_rank},
           {"state", review.deleted ? "deleted" : review.saved ? "saved" : "pending"},
           {"candidates", std::move(cands)}};
  if (review.saved) out["record"] = record_to_json(*review.saved);
  return out;
}

json JobService::job_view(const std::string& job_id) const {
  std::lock_guard lock(mu_);
  const auto& job = find_locked(job_id);
  const auto& s = job.snap;
  json out{{"job_id", s.job_id},
           {"status", to_string(s.status)},
           {"stream_id", s.stream_id},
           {"created_at", s.created_at},
           {"progress", {{"frames_processed", s.frames_processed}, {"frames_total", s.frames_total}}},
           {"instances_found", s.instances}};
  if (!s.error.empty()) out["error"] = s.error;
  if (s.status == JobStatus::Done) {
    json live = json::array(), deleted = json::array();
    for (const auto& inst : job.result.instances) {
      auto rit = job.reviews.find(inst.instance_id);
      if (rit != job.reviews.end() && rit->second.deleted) {
        deleted.push_back(inst.instance_id);
        continue;
      }
      live.push_back(instance_view_locked(job, inst));
    }
    out["instances"] = std::move(live);
    out["deleted"] = std::move(deleted);
  }
  return out;
}

std::string JobService::instances_document(const std::string& job_id) const {
  fs::path path;
  {
    std::lock_guard lock(mu_);
    const auto& job = find_locked(job_id);
    if (job.snap.status != JobStatus::Done) throw ServiceError("not_ready", 409, "job " + job_id + " is not done");
    path = job.output_dir / "instances.json";
  }
  try {
    return io::read_text(path);
  } catch (const std::exception& e) {
    throw ServiceError("storage", 500, e.what());
  }
}

fs::path JobService::candidate_png(const std::string& job_id, int instance_id, int rank) const {
  std::lock_guard lock(mu_);
  const auto& job = find_locked(job_id);
  const auto& inst = done_instance_locked(job, instance_id);
  if (rank < 1 || rank > static_cast<int>(inst.candidates.size())) {
    throw not_found("instance " + std::to_string(instance_id) + " has no candidate " + std::to_string(rank));
  }
  return job.output_dir / inst.candidates[static_cast<std::size_t>(rank) - 1].crop_path;
}

void JobService::ensure_ocr(const std::string& job_id, int instance_id, int rank) {
  fs::path crop_path;
  ocr::Provenance provenance;
  {
    std::lock_guard lock(mu_);
    auto& job = find_locked(job_id);
    const auto& inst = done_instance_locked(job, instance_id);
    auto& review = job.reviews[instance_id];
    if (review.ocr.count(rank)) return;
    review.ocr_errors.erase(rank);
    if (!options_.ocr) {
      review.ocr_errors[rank] = "no OCR service configured";
      return;
    }
    crop_path = job.output_dir / inst.candidates[static_cast<std::size_t>(rank) - 1].crop_path;
    provenance = job.annotation ? eval::annotated_provenance(job.result, *job.annotation)(inst)
                                : eval::pipeline_provenance(job.snap.stream_id)(inst);
  }
  std::optional<ocr::OcrResult> result;
  std::string error;
  try {
    const auto crop = io::read_png(crop_path);
    result = options_.ocr->recognize({&crop, provenance});
  } catch (const std::exception& e) {
    error = e.what();
  }
  std::lock_guard lock(mu_);
  auto& review = find_locked(job_id).reviews[instance_id];
  if (result) {
    review.ocr[rank] = *result;
  } else {
    review.ocr_errors[rank] = error;
  }
}

json JobService::select(const std::string& job_id, int instance_id, int rank) {
  {
    std::lock_guard lock(mu_);
    auto& job = find_locked(job_id);
    const auto& inst = done_instance_locked(job, instance_id);
    auto& review = job.reviews[instance_id];
    if (review.deleted) throw conflict("instance " + std::to_string(instance_id) + " was deleted");
    if (review.saved) throw conflict("instance " + std::to_string(instance_id) + " is already saved");
    if (rank < 1 || rank > static_cast<int>(inst.candidates.size())) {
      throw invalid("rank must be between 1 and " + std::to_string(inst.candidates.size()));
    }
    review.chosen_rank = rank;
  }
  ensure_ocr(job_id, instance_id, rank);
  std::lock_guard lock(mu_);
  const auto& job = find_locked(job_id);
  return instance_view_locked(job, done_instance_locked(job, instance_id));
}

ReviewRecord JobService::save(const std::string& job_id, int instance_id) {
  int rank;
  {
    std::lock_guard lock(mu_);
    auto& job = find_locked(job_id);
    done_instance_locked(job, instance_id);
    auto& review = job.reviews[instance_id];
    if (review.deleted) throw conflict("instance " + std::to_string(instance_id) + " was deleted");
    if (review.saved) return *review.saved;
    rank = review.chosen_rank;
  }
  ensure_ocr(job_id, instance_id, rank);
  std::lock_guard lock(mu_);
  auto& review = find_locked(job_id).reviews[instance_id];
  if (review.deleted) throw conflict("instance " + std::to_string(instance_id) + " was deleted");
  if (review.saved) return *review.saved;
  auto it = review.ocr.find(review.chosen_rank);
  if (it == review.ocr.end()) {
    const auto err = review.ocr_errors.count(review.chosen_rank) ? review.ocr_errors.at(review.chosen_rank)
                                                                  : std::string("OCR result unavailable");
    throw ServiceError(options_.ocr ? "ocr_failed" : "ocr_unavailable", options_.ocr ? 502 : 503, err);
  }
  ReviewRecord r{job_id,           instance_id, review.chosen_rank, it->second.text, ocr::normalize_bangla(it->second.text),
                 Decision::Saved, utc_timestamp()};
  store_.append(r);
  review.saved = r;
  return r;
}

ReviewRecord JobService::remove(const std::string& job_id, int instance_id) {
  std::lock_guard lock(mu_);
  auto& job = find_locked(job_id);
  done_instance_locked(job, instance_id);
  auto& review = job.reviews[instance_id];
  if (review.deleted) return *review.deleted;
  if (review.saved) throw conflict("instance " + std::to_string(instance_id) + " is saved and immutable");
  ReviewRecord r{job_id, instance_id, review.chosen_rank, {}, {}, Decision::Deleted, utc_timestamp()};
  if (auto it = review.ocr.find(review.chosen_rank); it != review.ocr.end()) {
    r.ocr_text = it->second.text;
    r.ocr_text_normalized = ocr::normalize_bangla(r.ocr_text);
  }
  store_.append(r);
  review.deleted = r;
  return r;
}

std::vector<ReviewRecord> JobService::results() const { return store_.replay(); }

}  // namespace plateflow::app
