#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "plateflow/eval/annotation.hpp"
#include "plateflow/ocr/ocr.hpp"
#include "plateflow/pipeline/pipeline.hpp"

namespace plateflow::app {

/// Error with an API code and HTTP status: not_found 404, invalid 400, conflict 409,
/// not_ready 409, ocr_unavailable 503, ocr_failed 502, storage 500.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(std::string code, int http_status, const std::string& message)
      : std::runtime_error(message), code(std::move(code)), http_status(http_status) {}
  std::string code;
  int http_status;
};

enum class JobStatus { Queued, Running, Done, Failed };
std::string to_string(JobStatus status);
JobStatus job_status_from_string(const std::string& s);

struct JobRequest {
  std::filesystem::path stream_dir;
  /// Pipeline settings (see pipeline_config_from_json); merged over the service defaults.
  nlohmann::json config = nlohmann::json::object();
};

struct JobSnapshot {
  std::string job_id;
  JobStatus status = JobStatus::Queued;
  std::string stream_id;
  std::filesystem::path stream_dir;
  std::int64_t frames_processed = 0;
  std::int64_t frames_total = 0;
  int instances = 0;
  std::string error;
  std::string created_at;
  nlohmann::json config;
};

enum class Decision { Saved, Deleted };

struct ReviewRecord {
  std::string job_id;
  int instance_id = 0;
  int chosen_rank = 1;
  std::string ocr_text;
  std::string ocr_text_normalized;
  Decision decision = Decision::Saved;
  std::string timestamp;
  bool operator==(const ReviewRecord&) const = default;
};

nlohmann::json record_to_json(const ReviewRecord& r);
ReviewRecord record_from_json(const nlohmann::json& doc);

/// Append-only JSON-lines file; one record per line.
class ResultsStore {
 public:
  explicit ResultsStore(std::filesystem::path path);
  void append(const ReviewRecord& record);
  /// Every record in append order. A torn final line (crash mid-append) is ignored.
  std::vector<ReviewRecord> replay() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
};

struct ServiceOptions {
  std::filesystem::path data_dir;
  int workers = 1;
  /// Null: select still works but OCR reports ocr_unavailable and save fails.
  std::shared_ptr<ocr::OcrService> ocr;
  nlohmann::json default_config = nlohmann::json::object();
};

/// PLATEFLOW_DATA_DIR and PLATEFLOW_OCR_URL, each overridden by a non-empty argument.
ServiceOptions service_options_from_env(const std::string& data_dir = {}, const std::string& ocr_url = {});

/// ISO-8601 UTC with milliseconds.
std::string utc_timestamp();

/// Jobs run on worker threads; every read is a snapshot taken under a short lock.
/// Layout under data_dir: jobs/<id>/job.json, jobs/<id>/<stream_id>/ (pipeline output),
/// uploads/<token>/ and results.jsonl.
class JobService {
 public:
  explicit JobService(ServiceOptions options);
  ~JobService();
  JobService(const JobService&) = delete;
  JobService& operator=(const JobService&) = delete;

  std::string submit(const JobRequest& request);
  /// Writes uploaded files (plain names only) to a fresh uploads/ directory and returns it.
  std::filesystem::path stage_upload(const std::vector<std::pair<std::string, std::string>>& files);

  JobSnapshot get(const std::string& job_id) const;
  /// Job document for GET /jobs/{id}: status, progress and, once done, the live instances
  /// with candidate URLs, cached OCR and review state.
  nlohmann::json job_view(const std::string& job_id) const;
  /// instances.json exactly as the pipeline wrote it.
  std::string instances_document(const std::string& job_id) const;
  std::filesystem::path candidate_png(const std::string& job_id, int instance_id, int rank) const;

  /// Chooses a rank and runs OCR for it if not cached. Returns the instance view.
  nlohmann::json select(const std::string& job_id, int instance_id, int rank);
  ReviewRecord save(const std::string& job_id, int instance_id);
  ReviewRecord remove(const std::string& job_id, int instance_id);
  std::vector<ReviewRecord> results() const;

  /// Blocks until the job is done or failed, or the timeout passes.
  JobSnapshot wait(const std::string& job_id, std::chrono::milliseconds timeout) const;
  const ServiceOptions& options() const { return options_; }

 private:
  struct Review {
    int chosen_rank = 1;
    std::optional<ReviewRecord> saved;
    std::optional<ReviewRecord> deleted;
    std::map<int, ocr::OcrResult> ocr;
    std::map<int, std::string> ocr_errors;
  };
  struct Job {
    JobSnapshot snap;
    pipeline::StreamResult result;
    std::optional<eval::VideoAnnotation> annotation;
    std::filesystem::path output_dir;
    std::map<int, Review> reviews;
  };

  void worker_loop();
  void run_job(const std::string& job_id);
  void write_job_file(const Job& job) const;
  void load_existing();
  Job& find_locked(const std::string& job_id);
  const Job& find_locked(const std::string& job_id) const;
  const pipeline::PlateInstance& done_instance_locked(const Job& job, int instance_id) const;
  nlohmann::json instance_view_locked(const Job& job, const pipeline::PlateInstance& inst) const;
  /// OCR for (job, instance, rank) unless cached; runs without holding the lock.
  void ensure_ocr(const std::string& job_id, int instance_id, int rank);

  ServiceOptions options_;
  ResultsStore store_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::map<std::string, Job> jobs_;
  std::deque<std::string> queue_;
  std::uint64_t next_id_ = 1;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace plateflow::app
