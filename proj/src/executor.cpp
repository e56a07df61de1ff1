#include "marco/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <string.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "marco/dsl.hpp"
#include "marco/errors.hpp"
#include "marco/util.hpp"

extern char** environ;

namespace marco {

namespace {

using nlohmann::json;

// Runs inside the child interpreter: applies rlimits, disables sockets,
// executes the candidate, then works through the job list writing one frame
// per job on fd 3. Exit 97 is reserved for infrastructure failures that
// happen before any candidate code runs.
constexpr const char* kDriverSource = R"PY(
import sys, os, json, ast, resource, socket

RESULT_FD = 3

def send(line):
    os.write(RESULT_FD, (line + "\n").encode("utf-8", "replace"))

try:
    with open(sys.argv[1], "r") as fh:
        payload = json.load(fh)
    limits = payload["limits"]
    cpu = max(1, int(limits["cpu_seconds"] + 0.999))
    mem = int(limits["memory_bytes"])
    out_cap = int(limits["output_bytes"])
    resource.setrlimit(resource.RLIMIT_CPU, (cpu, cpu + 1))
    if mem > 0:
        resource.setrlimit(resource.RLIMIT_AS, (mem, mem))
    resource.setrlimit(resource.RLIMIT_FSIZE, (16 * 1024 * 1024, 16 * 1024 * 1024))
    try:
        resource.setrlimit(resource.RLIMIT_NPROC, (64, 64))
    except (ValueError, OSError):
        pass

    class _NoSocket:
        def __init__(self, *args, **kwargs):
            raise OSError("network access is disabled in the sandbox")

    socket.socket = _NoSocket
except SystemExit:
    raise
except BaseException:
    sys.exit(97)

tol = payload.get("tolerance")
entry = payload.get("entry") or "f"
code = payload.get("code") or ""
jobs = payload["jobs"]

ns = {"__name__": "__candidate__"}
exec_error = None
try:
    exec(compile(code, "<candidate>", "exec"), ns)
    try:
        names = [n.name for n in ast.parse(code).body if isinstance(n, ast.FunctionDef)]
    except SyntaxError:
        names = []
    if entry not in ns and len(names) == 1 and names[0] in ns:
        ns[entry] = ns[names[0]]
except BaseException as exc:
    exec_error = exc

def deep_equal(a, b):
    if tol is None:
        try:
            return bool(a == b)
        except Exception:
            return False
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        try:
            return abs(a - b) <= tol
        except Exception:
            return False
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return type(a) is type(b) and len(a) == len(b) and all(
            deep_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, dict) and isinstance(b, dict):
        return set(a.keys()) == set(b.keys()) and all(deep_equal(a[k], b[k]) for k in a)
    try:
        return bool(a == b)
    except Exception:
        return False

def short_repr(value):
    try:
        text = repr(value)
    except Exception as exc:
        return "<unreprable: %s>" % type(exc).__name__
    if len(text) > out_cap:
        text = text[:out_cap] + " [...truncated]"
    return text

def error_text(exc):
    msg = " ".join(str(exc).splitlines())
    if len(msg) > 1000:
        msg = msg[:1000] + " [...truncated]"
    return type(exc).__name__ + ": " + msg

def eval_value(expr):
    return eval(compile(expr, "<value>", "eval"), {"__builtins__": {}})

for job in jobs:
    kind = job["kind"]
    if kind == "equal":
        try:
            a = eval_value(job["a"])
        except Exception as exc:
            send("MARCO_RESULT " + json.dumps(
                {"equal": False, "reason": "left operand: " + error_text(exc)}))
            continue
        try:
            b = eval_value(job["b"])
        except Exception as exc:
            send("MARCO_RESULT " + json.dumps(
                {"equal": False, "reason": "right operand: " + error_text(exc)}))
            continue
        send("MARCO_RESULT " + json.dumps({"equal": deep_equal(a, b)}))
        continue
    if exec_error is not None:
        if kind == "pair" and job.get("defect_on_call"):
            send("MARCO_RESULT " + json.dumps({"defect": error_text(exec_error)}))
        else:
            send("MARCO_ERROR " + error_text(exec_error))
        continue
    if kind == "eval":
        try:
            value = eval(compile(job["expr"], "<call>", "eval"), ns)
        except BaseException as exc:
            send("MARCO_ERROR " + error_text(exc))
            continue
        send("MARCO_RESULT " + json.dumps({"repr": short_repr(value)}))
        continue
    if kind == "pair":
        try:
            got = eval(compile(job["call"], "<call>", "eval"), ns)
        except BaseException as exc:
            if job.get("defect_on_call"):
                send("MARCO_RESULT " + json.dumps({"defect": error_text(exc)}))
            else:
                send("MARCO_ERROR " + error_text(exc))
            continue
        try:
            want = eval_value(job["expect"])
        except Exception as exc:
            if job.get("defect_on_expect"):
                send("MARCO_RESULT " + json.dumps({"defect": error_text(exc)}))
            else:
                send("MARCO_RESULT " + json.dumps(
                    {"equal": False, "reason": error_text(exc)}))
            continue
        frame = {"equal": deep_equal(got, want)}
        if job.get("return_got") and not frame["equal"]:
            frame["got"] = short_repr(got)
        send("MARCO_RESULT " + json.dumps(frame))
        continue
    send("MARCO_ERROR RuntimeError: unknown job kind " + str(kind))

send("MARCO_DONE")
)PY";

constexpr std::size_t kMessageCap = 1000;

[[noreturn]] void sandbox_fail(const std::string& what) {
  raise(ErrorKind::SandboxError, what);
}

struct ScratchDir {
  std::string path;

  ScratchDir() {
    char tmpl[] = "/tmp/marco-exec-XXXXXX";
    if (!mkdtemp(tmpl)) {
      sandbox_fail(std::string("mkdtemp failed: ") + strerror(errno));
    }
    path = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) sandbox_fail("cannot write " + path);
}

// Moves a pipe write end above the stdio range so the child-side dup2 targets
// (1, 2, 3) can never collide with the source descriptor.
int lift_fd(int fd) {
  int moved = fcntl(fd, F_DUPFD_CLOEXEC, 10);
  int saved = errno;
  close(fd);
  if (moved < 0) sandbox_fail(std::string("fcntl F_DUPFD failed: ") + strerror(saved));
  return moved;
}

struct ChildCapture {
  bool wall_timeout = false;
  bool output_overflow = false;
  int wait_status = 0;
  double cpu_seconds = 0.0;
  double wall_seconds = 0.0;
  std::string result_stream;
  std::string stderr_text;
};

ChildCapture spawn_and_collect(const std::string& interpreter, const std::string& scratch,
                               const std::string& driver_path, const std::string& payload_path,
                               const SandboxLimits& limits) {
  int out_pipe[2], err_pipe[2], res_pipe[2];
  if (pipe2(out_pipe, O_CLOEXEC) != 0 || pipe2(err_pipe, O_CLOEXEC) != 0 ||
      pipe2(res_pipe, O_CLOEXEC) != 0) {
    sandbox_fail(std::string("pipe2 failed: ") + strerror(errno));
  }
  int out_w = lift_fd(out_pipe[1]);
  int err_w = lift_fd(err_pipe[1]);
  int res_w = lift_fd(res_pipe[1]);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_adddup2(&actions, out_w, 1);
  posix_spawn_file_actions_adddup2(&actions, err_w, 2);
  posix_spawn_file_actions_adddup2(&actions, res_w, 3);
  posix_spawn_file_actions_addchdir_np(&actions, scratch.c_str());

  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);

  std::vector<std::string> arg_store = {interpreter, "-I", "-S", "-B", driver_path,
                                        payload_path};
  std::vector<char*> argv;
  for (std::string& arg : arg_store) argv.push_back(arg.data());
  argv.push_back(nullptr);

  std::vector<std::string> env_store = {
      "PATH=/usr/local/sbin:/usr/local/bin:/usr/sbin:/usr/bin:/sbin:/bin",
      "HOME=" + scratch,
      "TMPDIR=" + scratch,
      "LC_ALL=C",
  };
  std::vector<char*> envp;
  for (std::string& var : env_store) envp.push_back(var.data());
  envp.push_back(nullptr);

  pid_t pid = -1;
  int rc = posix_spawnp(&pid, interpreter.c_str(), &actions, &attr, argv.data(), envp.data());
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  close(out_w);
  close(err_w);
  close(res_w);
  if (rc != 0) {
    close(out_pipe[0]);
    close(err_pipe[0]);
    close(res_pipe[0]);
    sandbox_fail("cannot spawn interpreter '" + interpreter + "': " + strerror(rc));
  }

  const auto start = std::chrono::steady_clock::now();
  auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(limits.wall_seconds));

  ChildCapture capture;
  std::string stdout_text;
  struct Sink {
    int fd;
    std::string* buf;
    bool open = true;
  };
  Sink sinks[3] = {{out_pipe[0], &stdout_text},
                   {err_pipe[0], &capture.stderr_text},
                   {res_pipe[0], &capture.result_stream}};

  const std::size_t stdio_cap = limits.output_bytes;
  const std::size_t result_cap = limits.output_bytes + 16384;
  bool killed = false;
  bool reaped = false;
  struct rusage usage {};

  auto kill_group = [&killed, pid, &deadline]() {
    if (killed) return;
    kill(-pid, SIGKILL);
    killed = true;
    // Allow a short drain window for whatever the pipes still hold.
    deadline = std::chrono::steady_clock::now() + std::chrono::seconds(2);
  };

  while (true) {
    if (!reaped) {
      int status = 0;
      pid_t r = wait4(pid, &status, WNOHANG, &usage);
      if (r == pid) {
        reaped = true;
        capture.wait_status = status;
      }
    }
    bool any_open = sinks[0].open || sinks[1].open || sinks[2].open;
    if (reaped && !any_open) break;

    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      if (!killed) {
        capture.wall_timeout = true;
        kill_group();
        continue;
      }
      // Post-kill drain window expired; give up on stragglers.
      for (Sink& sink : sinks) {
        if (sink.open) {
          close(sink.fd);
          sink.open = false;
        }
      }
      if (reaped) break;
      continue;
    }

    int timeout_ms = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
    timeout_ms = std::max(1, std::min(timeout_ms, 100));

    struct pollfd fds[3];
    int nfds = 0;
    for (Sink& sink : sinks) {
      if (sink.open) {
        fds[nfds].fd = sink.fd;
        fds[nfds].events = POLLIN;
        fds[nfds].revents = 0;
        ++nfds;
      }
    }
    int ready = poll(fds, nfds, timeout_ms);
    if (ready < 0 && errno != EINTR) {
      kill_group();
      for (Sink& sink : sinks) {
        if (sink.open) {
          close(sink.fd);
          sink.open = false;
        }
      }
      continue;
    }
    if (ready <= 0) continue;

    for (int i = 0; i < nfds; ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      Sink* sink = nullptr;
      for (Sink& s : sinks) {
        if (s.open && s.fd == fds[i].fd) sink = &s;
      }
      if (!sink) continue;
      char chunk[4096];
      ssize_t n = read(sink->fd, chunk, sizeof(chunk));
      if (n > 0) {
        sink->buf->append(chunk, static_cast<std::size_t>(n));
        std::size_t cap = sink->buf == &capture.result_stream ? result_cap : stdio_cap;
        if (sink->buf->size() > cap) {
          sink->buf->resize(cap);
          capture.output_overflow = true;
          kill_group();
        }
      } else if (n == 0 || (n < 0 && errno != EINTR && errno != EAGAIN)) {
        close(sink->fd);
        sink->open = false;
      }
    }
  }

  if (!killed) kill(-pid, SIGKILL);  // reap any stray descendants of the group
  capture.cpu_seconds = static_cast<double>(usage.ru_utime.tv_sec + usage.ru_stime.tv_sec) +
                        static_cast<double>(usage.ru_utime.tv_usec + usage.ru_stime.tv_usec) / 1e6;
  capture.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return capture;
}

struct Frame {
  bool is_error = false;
  json body;                 // MARCO_RESULT payload
  std::string error_class;   // MARCO_ERROR parts
  std::string error_message;
};

struct JobsOutput {
  std::vector<std::optional<Frame>> frames;  // one slot per job
  bool done = false;
  ChildCapture capture;
};

JobsOutput parse_frames(ChildCapture capture, std::size_t job_count) {
  JobsOutput out;
  out.frames.resize(job_count);
  std::size_t next = 0;
  std::size_t pos = 0;
  const std::string& stream = capture.result_stream;
  while (pos < stream.size()) {
    std::size_t eol = stream.find('\n', pos);
    std::string line = stream.substr(pos, eol == std::string::npos ? eol : eol - pos);
    pos = eol == std::string::npos ? stream.size() : eol + 1;
    if (line.rfind("MARCO_DONE", 0) == 0) {
      out.done = true;
    } else if (line.rfind("MARCO_RESULT ", 0) == 0 && next < job_count) {
      Frame frame;
      frame.body = json::parse(line.substr(13), nullptr, false);
      if (frame.body.is_discarded()) continue;
      out.frames[next++] = std::move(frame);
    } else if (line.rfind("MARCO_ERROR ", 0) == 0 && next < job_count) {
      Frame frame;
      frame.is_error = true;
      std::string rest = line.substr(12);
      std::size_t sep = rest.find(": ");
      if (sep == std::string::npos) {
        frame.error_class = rest;
      } else {
        frame.error_class = rest.substr(0, sep);
        frame.error_message = rest.substr(sep + 2);
      }
      out.frames[next++] = std::move(frame);
    }
  }
  out.capture = std::move(capture);
  return out;
}

// Per-job verdict after child-level failures are folded in.
struct JobResult {
  ExecOutcome outcome;                // authoritative when frame is absent
  std::optional<json> frame;          // MARCO_RESULT body
};

std::vector<JobResult> run_jobs(const std::string& interpreter, const SandboxLimits& limits,
                                const json& payload, std::size_t job_count) {
  ScratchDir scratch;
  std::string driver_path = scratch.path + "/driver.py";
  std::string payload_path = scratch.path + "/payload.json";
  write_file(driver_path, kDriverSource);
  write_file(payload_path, payload.dump());

  JobsOutput output =
      parse_frames(spawn_and_collect(interpreter, scratch.path, driver_path, payload_path, limits),
                   job_count);
  const ChildCapture& cap = output.capture;

  auto broadcast = [&](ExecStatus status, std::string error_class, std::string message) {
    std::vector<JobResult> all(job_count);
    for (JobResult& jr : all) {
      jr.outcome.status = status;
      jr.outcome.error_class = error_class;
      jr.outcome.message = message;
      jr.outcome.cpu_seconds = cap.cpu_seconds;
      jr.outcome.wall_seconds = cap.wall_seconds;
    }
    return all;
  };

  if (cap.wall_timeout) return broadcast(ExecStatus::Timeout, "", "wall time limit exceeded");
  if (WIFSIGNALED(cap.wait_status)) {
    if (WTERMSIG(cap.wait_status) == SIGXCPU) {
      return broadcast(ExecStatus::Timeout, "", "cpu time limit exceeded");
    }
    if (cap.output_overflow) {
      return broadcast(ExecStatus::ResourceKilled, "", "output limit exceeded");
    }
    return broadcast(ExecStatus::ResourceKilled, "",
                     "killed by signal " + std::to_string(WTERMSIG(cap.wait_status)));
  }
  if (cap.output_overflow) {
    return broadcast(ExecStatus::ResourceKilled, "", "output limit exceeded");
  }

  int exit_code = WIFEXITED(cap.wait_status) ? WEXITSTATUS(cap.wait_status) : -1;
  if (exit_code == 97 || exit_code == 127) {
    sandbox_fail("interpreter startup failed (exit " + std::to_string(exit_code) + "): " +
                 util::truncate_within(cap.stderr_text, 300));
  }

  std::vector<JobResult> results(job_count);
  for (std::size_t i = 0; i < job_count; ++i) {
    JobResult& jr = results[i];
    jr.outcome.cpu_seconds = cap.cpu_seconds;
    jr.outcome.wall_seconds = cap.wall_seconds;
    const std::optional<Frame>& frame = output.frames[i];
    if (!frame) {
      if (exit_code == 0 && output.done) {
        sandbox_fail("driver produced no result frame for a job");
      }
      jr.outcome.status = ExecStatus::Exception;
      jr.outcome.error_class = exit_code == 0 ? "SystemExit" : "ProcessExit";
      jr.outcome.message = exit_code == 0
                               ? "interpreter exited before completing checks"
                               : "interpreter exited with code " + std::to_string(exit_code);
      continue;
    }
    if (frame->is_error) {
      if (frame->error_class == "MemoryError") {
        jr.outcome.status = ExecStatus::ResourceKilled;
        jr.outcome.error_class = "";
        jr.outcome.message = util::truncate_within(
            "MemoryError: " + frame->error_message, kMessageCap);
      } else {
        jr.outcome.status = ExecStatus::Exception;
        jr.outcome.error_class = frame->error_class;
        jr.outcome.message = util::truncate_within(frame->error_message, kMessageCap);
      }
      continue;
    }
    jr.outcome.status = ExecStatus::Value;
    jr.frame = frame->body;
  }
  return results;
}

json base_payload(const std::string& code, const std::string& entry,
                  const SandboxLimits& limits, std::optional<double> tolerance) {
  json payload;
  payload["code"] = code;
  payload["entry"] = entry;
  payload["limits"] = {{"cpu_seconds", limits.cpu_seconds},
                       {"memory_bytes", limits.memory_bytes},
                       {"output_bytes", limits.output_bytes}};
  payload["tolerance"] = tolerance ? json(*tolerance) : json(nullptr);
  payload["jobs"] = json::array();
  return payload;
}

// ---------------------------------------------------------------------------
// In-process DSL paths.
// ---------------------------------------------------------------------------

bool is_dsl(CodeLanguage language) { return language != CodeLanguage::General; }

struct DslProgram {
  CodeLanguage language;
  dsl::ListProgram list;
  dsl::StringProgram str;
};

// Parse failure is reported through the outcome-style (class, message) pair.
std::optional<DslProgram> parse_dsl_program(const std::string& source, CodeLanguage language,
                                            std::string* error_class, std::string* message) {
  DslProgram program;
  program.language = language;
  try {
    if (language == CodeLanguage::ListDsl) {
      program.list = dsl::parse_list_dsl(source);
    } else {
      program.str = dsl::parse_string_dsl(source);
    }
  } catch (const MarcoError& err) {
    if (error_class) *error_class = to_string(err.kind());
    if (message) *message = err.what();
    return std::nullopt;
  }
  return program;
}

struct DslEval {
  bool ok = false;
  dsl::Value value;
  std::string error;
};

DslEval eval_dsl(const DslProgram& program, const dsl::Value& input) {
  DslEval out;
  if (program.language == CodeLanguage::ListDsl) {
    if (input.type != dsl::Value::Type::List) {
      out.error = "input is not an int list";
      return out;
    }
    dsl::EvalResult r = dsl::try_eval_list_dsl(program.list, input.list);
    out.ok = r.ok;
    out.value = std::move(r.value);
    out.error = std::move(r.error);
    return out;
  }
  if (input.type != dsl::Value::Type::Str) {
    out.error = "input is not a string";
    return out;
  }
  dsl::StrEvalResult r = dsl::try_eval_string_dsl(program.str, input.str);
  out.ok = r.ok;
  out.value = dsl::Value::of_str(std::move(r.value));
  out.error = std::move(r.error);
  return out;
}

}  // namespace

std::string to_string(ExecStatus status) {
  switch (status) {
    case ExecStatus::Value: return "value";
    case ExecStatus::Exception: return "exception";
    case ExecStatus::Timeout: return "timeout";
    case ExecStatus::ResourceKilled: return "resource_killed";
    case ExecStatus::SandboxError: return "sandbox_error";
  }
  return "sandbox_error";
}

std::string extract_code(const std::string& raw_text) {
  std::vector<std::string> blocks;
  std::size_t pos = 0;
  std::optional<std::size_t> open_at;
  std::string current;
  while (pos <= raw_text.size()) {
    std::size_t eol = raw_text.find('\n', pos);
    std::string line =
        raw_text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    std::string trimmed = util::trim(line);
    if (trimmed.rfind("```", 0) == 0) {
      if (!open_at) {
        open_at = pos;
        current.clear();
      } else {
        blocks.push_back(current);
        open_at.reset();
      }
    } else if (open_at) {
      current += line;
      current += '\n';
    }
    if (eol == std::string::npos) break;
    pos = eol + 1;
  }
  if (blocks.empty()) {
    raise(ErrorKind::NoCodeBlock, "response contains no fenced code block");
  }
  return util::trim(blocks.back());
}

Executor::Executor(SandboxLimits limits, std::string interpreter)
    : limits_(limits), interpreter_(std::move(interpreter)) {}

ExecOutcome Executor::run_candidate(const std::string& code, const std::string& call_expr,
                                    CodeLanguage language, const std::string& entry) const {
  if (is_dsl(language)) {
    ExecOutcome outcome;
    std::string error_class, message;
    std::optional<DslProgram> program = parse_dsl_program(code, language, &error_class, &message);
    if (!program) {
      outcome.status = ExecStatus::Exception;
      outcome.error_class = error_class;
      outcome.message = util::truncate_within(message, kMessageCap);
      return outcome;
    }
    std::optional<dsl::Value> input = dsl::try_parse_value(call_expr);
    if (!input) {
      outcome.status = ExecStatus::Exception;
      outcome.error_class = "ParseError";
      outcome.message = "input is not a value expression";
      return outcome;
    }
    DslEval result = eval_dsl(*program, *input);
    if (!result.ok) {
      outcome.status = ExecStatus::Exception;
      outcome.error_class = "EvalError";
      outcome.message = util::truncate_within(result.error, kMessageCap);
      return outcome;
    }
    outcome.status = ExecStatus::Value;
    outcome.value_repr = dsl::to_source(result.value);
    return outcome;
  }

  json payload = base_payload(code, entry, limits_, std::nullopt);
  payload["jobs"].push_back({{"kind", "eval"}, {"expr", call_expr}});
  JobResult jr = std::move(run_jobs(interpreter_, limits_, payload, 1)[0]);
  if (jr.frame) {
    jr.outcome.value_repr = jr.frame->value("repr", "");
  }
  return jr.outcome;
}

bool Executor::values_equal(const std::string& a_expr, const std::string& b_expr,
                            CodeLanguage language, std::optional<double> tolerance,
                            std::string* reason) const {
  if (reason) reason->clear();
  if (is_dsl(language)) {
    std::optional<dsl::Value> a = dsl::try_parse_value(a_expr);
    std::optional<dsl::Value> b = dsl::try_parse_value(b_expr);
    if (!a || !b) {
      if (reason) *reason = std::string(!a ? "left" : "right") + " operand: not a value expression";
      return false;
    }
    return *a == *b;
  }

  json payload = base_payload("", "f", limits_, tolerance);
  payload["jobs"].push_back({{"kind", "equal"}, {"a", a_expr}, {"b", b_expr}});
  JobResult jr = std::move(run_jobs(interpreter_, limits_, payload, 1)[0]);
  if (!jr.frame) {
    if (reason) *reason = to_string(jr.outcome.status) + ": " + jr.outcome.message;
    return false;
  }
  if (!jr.frame->value("equal", false)) {
    if (reason) *reason = jr.frame->value("reason", "");
    return false;
  }
  return true;
}

std::vector<CheckRecord> Executor::check_induction(const std::string& code,
                                                   const std::vector<IOPair>& pairs,
                                                   CodeLanguage language,
                                                   const std::string& entry,
                                                   std::optional<double> tolerance) const {
  std::vector<CheckRecord> records;
  records.reserve(pairs.size());

  if (is_dsl(language)) {
    std::string error_class, message;
    std::optional<DslProgram> program = parse_dsl_program(code, language, &error_class, &message);
    int index = 0;
    for (const IOPair& pair : pairs) {
      CheckRecord record;
      record.index = ++index;
      if (!program) {
        record.passed = false;
        record.error_class = error_class;
        record.message = util::truncate_within(message, kMessageCap);
        records.push_back(std::move(record));
        continue;
      }
      std::optional<dsl::Value> input = dsl::try_parse_value(pair.input);
      std::optional<dsl::Value> expected = dsl::try_parse_value(pair.output);
      if (!input || !expected) {
        raise(ErrorKind::DatasetDefect,
              "pair " + std::to_string(index) + " of a DSL problem does not parse");
      }
      DslEval result = eval_dsl(*program, *input);
      if (!result.ok) {
        record.passed = false;
        record.error_class = "EvalError";
        record.message = util::truncate_within(result.error, kMessageCap);
      } else if (result.value != *expected) {
        record.passed = false;
        record.message = "returned " + util::truncate_within(dsl::to_source(result.value), 200);
      } else {
        record.passed = true;
      }
      records.push_back(std::move(record));
    }
    return records;
  }

  int index = 0;
  for (const IOPair& pair : pairs) {
    json payload = base_payload(code, entry, limits_, tolerance);
    payload["jobs"].push_back({{"kind", "pair"},
                               {"call", entry + "(" + pair.input + ")"},
                               {"expect", pair.output},
                               {"defect_on_call", false},
                               {"defect_on_expect", true},
                               {"return_got", true}});
    JobResult jr = std::move(run_jobs(interpreter_, limits_, payload, 1)[0]);

    CheckRecord record;
    record.index = ++index;
    if (jr.frame) {
      if (jr.frame->contains("defect")) {
        raise(ErrorKind::DatasetDefect, "pair " + std::to_string(index) +
                                            " expected output failed to evaluate: " +
                                            jr.frame->value("defect", ""));
      }
      record.passed = jr.frame->value("equal", false);
      if (!record.passed) {
        std::string got = jr.frame->value("got", "");
        record.message = got.empty() ? "wrong output" : "returned " + got;
      }
    } else {
      record.passed = false;
      switch (jr.outcome.status) {
        case ExecStatus::Timeout: record.error_class = "Timeout"; break;
        case ExecStatus::ResourceKilled: record.error_class = "ResourceKilled"; break;
        default: record.error_class = jr.outcome.error_class; break;
      }
      record.message = jr.outcome.message;
    }
    records.push_back(std::move(record));
  }
  return records;
}

bool Executor::check_deduction(const std::string& predicted_output,
                               const std::string& function_source,
                               const std::string& input_expr, CodeLanguage language,
                               std::optional<double> tolerance) const {
  if (is_dsl(language)) {
    std::string error_class, message;
    std::optional<DslProgram> program =
        parse_dsl_program(function_source, language, &error_class, &message);
    if (!program) {
      raise(ErrorKind::DatasetDefect, "deduction function does not parse: " + message);
    }
    std::optional<dsl::Value> input = dsl::try_parse_value(input_expr);
    if (!input) raise(ErrorKind::DatasetDefect, "deduction input does not parse");
    DslEval truth = eval_dsl(*program, *input);
    if (!truth.ok) {
      raise(ErrorKind::DatasetDefect, "deduction function failed on its input: " + truth.error);
    }
    std::optional<dsl::Value> predicted = dsl::try_parse_value(predicted_output);
    return predicted && *predicted == truth.value;
  }

  json payload = base_payload(function_source, "f", limits_, tolerance);
  payload["jobs"].push_back({{"kind", "pair"},
                             {"call", "f(" + input_expr + ")"},
                             {"expect", predicted_output},
                             {"defect_on_call", true},
                             {"defect_on_expect", false},
                             {"return_got", false}});
  JobResult jr = std::move(run_jobs(interpreter_, limits_, payload, 1)[0]);
  if (!jr.frame) {
    if (jr.outcome.status == ExecStatus::Timeout ||
        jr.outcome.status == ExecStatus::ResourceKilled) {
      raise(ErrorKind::DatasetDefect,
            "deduction function did not finish on its input: " + jr.outcome.message);
    }
    return false;
  }
  if (jr.frame->contains("defect")) {
    raise(ErrorKind::DatasetDefect,
          "deduction function failed on its input: " + jr.frame->value("defect", ""));
  }
  return jr.frame->value("equal", false);
}

bool Executor::check_abduction(const std::string& predicted_input,
                               const std::string& function_source,
                               const std::string& expected_output, CodeLanguage language,
                               std::optional<double> tolerance) const {
  if (is_dsl(language)) {
    std::string error_class, message;
    std::optional<DslProgram> program =
        parse_dsl_program(function_source, language, &error_class, &message);
    if (!program) {
      raise(ErrorKind::DatasetDefect, "abduction function does not parse: " + message);
    }
    std::optional<dsl::Value> expected = dsl::try_parse_value(expected_output);
    if (!expected) raise(ErrorKind::DatasetDefect, "abduction output does not parse");
    std::optional<dsl::Value> predicted = dsl::try_parse_value(predicted_input);
    if (!predicted) return false;
    DslEval result = eval_dsl(*program, *predicted);
    return result.ok && result.value == *expected;
  }

  json payload = base_payload(function_source, "f", limits_, tolerance);
  payload["jobs"].push_back({{"kind", "pair"},
                             {"call", "f(" + predicted_input + ")"},
                             {"expect", expected_output},
                             {"defect_on_call", false},
                             {"defect_on_expect", true},
                             {"return_got", false}});
  JobResult jr = std::move(run_jobs(interpreter_, limits_, payload, 1)[0]);
  if (!jr.frame) return false;  // candidate-side failure, including timeouts
  if (jr.frame->contains("defect")) {
    raise(ErrorKind::DatasetDefect,
          "abduction expected output failed to evaluate: " + jr.frame->value("defect", ""));
  }
  return jr.frame->value("equal", false);
}

Feedback make_feedback(const std::vector<CheckRecord>& records, FeedbackKind kind,
                       const PromptCaps& caps) {
  if (records.empty()) raise(ErrorKind::Config, "make_feedback requires at least one record");

  Feedback feedback;
  feedback.kind = kind;
  feedback.detail = records;
  std::size_t passed = 0;
  for (const CheckRecord& record : records) {
    if (record.passed) ++passed;
  }
  feedback.passed = passed == records.size();

  if (kind == FeedbackKind::FinalBinary) {
    if (passed == records.size()) {
      feedback.rendered = "All your answers are correct for the given examples.";
    } else if (passed == 0) {
      feedback.rendered = "All your answers are wrong for the given examples.";
    } else {
      feedback.rendered =
          "Some of your answers are correct, but others are wrong for the given examples.";
    }
    return feedback;
  }

  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const CheckRecord& record : records) {
    std::string line = "Example " + std::to_string(record.index) + ": ";
    if (record.passed) {
      line += "pass";
    } else {
      line += "fail";
      std::string detail = record.error_class;
      if (!record.message.empty()) {
        detail += detail.empty() ? record.message : ": " + record.message;
      }
      if (!detail.empty()) {
        line += " (" + util::truncate_within(detail, 200) + ")";
      }
    }
    lines.push_back(std::move(line));
  }
  feedback.rendered = util::truncate_within(util::join(lines, "\n"), caps.feedback_chars);
  return feedback;
}

}  // namespace marco
