// Thread registry, directed signal bus and restart checkpoints shared by the
// signal-based reclamation schemes (NBR, NBR+, and the publish-on-ping family).
//
// A process has one handler per signal number, so a single handler is
// installed on first registration and dispatches on the receiving thread's
// handler kind. Handler bodies only touch the receiving thread's own slots,
// bump counters, and (for neutralization) perform a non-local jump.
#pragma once

#include <pthread.h>
#include <sched.h>
#include <sys/syscall.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <csetjmp>
#include <csignal>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

namespace reclaim {

inline constexpr std::size_t kCacheLine = 64;

enum class HandlerKind : std::uint8_t { none, nbr_neutralize, pop_publish };

class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegistryFull : public RegistryError {
 public:
  RegistryFull() : RegistryError("thread registry is full") {}
};

class AlreadyRegistered : public RegistryError {
 public:
  AlreadyRegistered() : RegistryError("calling thread is already registered") {}
};

/// Saved execution context for restartable read phases.
///
/// The context is filled by RECLAIM_CHECKPOINT in the frame that performs the
/// read phase. A restore jumps back to the most recent save on the same thread.
struct Checkpoint {
  sigjmp_buf context;
  bool armed = false;
  bool resumed = false;
  std::uint64_t restores = 0;
};

struct RuntimeConfig {
  int max_threads = 8;
  /// 0 selects RECLAIM_SIGNUM from the environment, else the first real-time
  /// signal.
  int signum = 0;
  std::chrono::nanoseconds post_broadcast_delay{1000};
};

struct SignalStats {
  std::atomic<std::uint64_t> signals_sent{0};
  std::atomic<std::uint64_t> signals_received{0};
  std::atomic<std::uint64_t> handler_entries{0};
};

class Runtime;

namespace detail {

using PublishFn = void (*)(void* context, int tid) noexcept;

struct alignas(kCacheLine) ThreadSlot {
  Runtime* owner = nullptr;
  int tid = -1;
  pid_t os_tid = 0;
  std::atomic<bool> registered{false};
  std::atomic<bool> alive{false};
  HandlerKind kind = HandlerKind::none;

  // nbr_neutralize target
  const std::atomic<bool>* restartable = nullptr;
  Checkpoint* checkpoint = nullptr;

  // pop_publish target
  PublishFn publish = nullptr;
  void* publish_context = nullptr;

  // Number of handler entries on this thread; doubles as a generation counter.
  std::atomic<std::uint64_t> handler_entries{0};
};

inline thread_local ThreadSlot* tls_slot = nullptr;
inline thread_local std::uint64_t tls_runtime_id = 0;

inline std::atomic<std::uint64_t> next_runtime_id{1};

inline pid_t current_os_tid() noexcept {
  return static_cast<pid_t>(::syscall(SYS_gettid));
}

inline int send_to(pid_t os_tid, int signum) noexcept {
  if (::syscall(SYS_tgkill, ::getpid(), os_tid, signum) == 0) return 0;
  return errno;
}

inline int resolve_signum(int requested) {
  if (requested != 0) return requested;
  if (const char* env = std::getenv("RECLAIM_SIGNUM"); env && *env) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0 && v < NSIG) return static_cast<int>(v);
    throw std::invalid_argument("RECLAIM_SIGNUM is not a valid signal number");
  }
  return SIGRTMIN;
}

void dispatch_signal(int signum, siginfo_t* info, void* ucontext);

inline void install_handler(int signum) {
  static std::mutex mu;
  static bool installed[NSIG] = {};
  std::lock_guard lock(mu);
  if (installed[signum]) return;
  struct sigaction sa {};
  sa.sa_sigaction = &dispatch_signal;
  sigemptyset(&sa.sa_mask);
  sa.sa_flags = SA_SIGINFO | SA_RESTART;
  if (::sigaction(signum, &sa, nullptr) != 0)
    throw std::runtime_error("sigaction failed");
  installed[signum] = true;
}

}  // namespace detail

/// Fixed-size registry of participating threads plus the broadcast machinery.
class Runtime {
 public:
  explicit Runtime(RuntimeConfig config = {})
      : config_(config),
        signum_(detail::resolve_signum(config.signum)),
        id_(detail::next_runtime_id.fetch_add(1)),
        slots_(std::make_unique<detail::ThreadSlot[]>(
            static_cast<std::size_t>(config.max_threads))) {
    if (config.max_threads <= 0)
      throw std::invalid_argument("max_threads must be positive");
  }

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  ~Runtime() {
    if (detail::tls_runtime_id == id_) {
      detail::tls_slot = nullptr;
      detail::tls_runtime_id = 0;
    }
  }

  /// Registers the calling thread and returns its dense id.
  int register_thread(HandlerKind kind) {
    if (detail::tls_runtime_id == id_) throw AlreadyRegistered();
    int tid = next_tid_.fetch_add(1);
    if (tid >= config_.max_threads) {
      next_tid_.fetch_sub(1);
      throw RegistryFull();
    }
    detail::install_handler(signum_);
    auto& s = slots_[static_cast<std::size_t>(tid)];
    s.owner = this;
    s.tid = tid;
    s.os_tid = detail::current_os_tid();
    s.kind = kind;
    s.alive.store(true);
    s.registered.store(true, std::memory_order_release);
    detail::tls_slot = &s;
    detail::tls_runtime_id = id_;
    return tid;
  }

  void bind_neutralize(int tid, const std::atomic<bool>* restartable,
                       Checkpoint* checkpoint) {
    auto& s = slot(tid);
    s.restartable = restartable;
    s.checkpoint = checkpoint;
  }

  void bind_publish(int tid, detail::PublishFn fn, void* context) {
    auto& s = slot(tid);
    s.publish_context = context;
    s.publish = fn;
  }

  /// Sends the signal to every other registered live thread. Targets whose
  /// send reports "no such thread" are marked dead and skipped from then on.
  std::size_t broadcast_signal(int from) {
    std::size_t delivered = 0;
    int n = registered_count();
    for (int t = 0; t < n; ++t) {
      if (t == from) continue;
      auto& s = slots_[static_cast<std::size_t>(t)];
      if (!s.alive.load(std::memory_order_acquire)) continue;
      int err = detail::send_to(s.os_tid, signum_);
      if (err == 0) {
        ++delivered;
      } else if (err == ESRCH) {
        s.alive.store(false, std::memory_order_release);
      }
    }
    stats_.signals_sent.fetch_add(delivered, std::memory_order_relaxed);
    return delivered;
  }

  /// Sends one directed signal; returns false if the target is dead.
  bool send_signal(int to) {
    auto& s = slot(to);
    if (!s.alive.load(std::memory_order_acquire)) return false;
    int err = detail::send_to(s.os_tid, signum_);
    if (err == ESRCH) {
      s.alive.store(false, std::memory_order_release);
      return false;
    }
    if (err == 0) stats_.signals_sent.fetch_add(1, std::memory_order_relaxed);
    return err == 0;
  }

  /// Re-checks whether a thread still exists (signal 0 probe).
  bool probe_alive(int tid) {
    auto& s = slot(tid);
    if (!s.alive.load(std::memory_order_acquire)) return false;
    if (detail::send_to(s.os_tid, 0) == ESRCH) {
      s.alive.store(false, std::memory_order_release);
      return false;
    }
    return true;
  }

  /// Spins long enough for in-flight interrupts to land before reservations
  /// are scanned.
  void post_broadcast_delay() const noexcept {
    if (config_.post_broadcast_delay.count() <= 0) return;
    auto until = std::chrono::steady_clock::now() + config_.post_broadcast_delay;
    while (std::chrono::steady_clock::now() < until) {
    }
  }

  [[nodiscard]] int max_threads() const noexcept { return config_.max_threads; }
  [[nodiscard]] int registered_count() const noexcept {
    int n = next_tid_.load(std::memory_order_acquire);
    return n < config_.max_threads ? n : config_.max_threads;
  }
  [[nodiscard]] bool is_alive(int tid) const noexcept {
    return slots_[static_cast<std::size_t>(tid)].alive.load(
        std::memory_order_acquire);
  }
  [[nodiscard]] int signum() const noexcept { return signum_; }
  [[nodiscard]] const RuntimeConfig& config() const noexcept { return config_; }
  [[nodiscard]] SignalStats& stats() noexcept { return stats_; }
  [[nodiscard]] const SignalStats& stats() const noexcept { return stats_; }

  [[nodiscard]] std::uint64_t handler_entries(int tid) const noexcept {
    return slots_[static_cast<std::size_t>(tid)].handler_entries.load(
        std::memory_order_acquire);
  }

  /// Marks a thread as gone without waiting for the OS to report it.
  void mark_dead(int tid) noexcept {
    slots_[static_cast<std::size_t>(tid)].alive.store(false,
                                                      std::memory_order_release);
  }

 private:
  detail::ThreadSlot& slot(int tid) {
    if (tid < 0 || tid >= registered_count())
      throw std::out_of_range("tid is not registered");
    return slots_[static_cast<std::size_t>(tid)];
  }

  RuntimeConfig config_;
  int signum_;
  std::uint64_t id_;
  std::unique_ptr<detail::ThreadSlot[]> slots_;
  std::atomic<int> next_tid_{0};
  SignalStats stats_;
};

namespace detail {

inline void dispatch_signal(int, siginfo_t*, void*) {
  const int saved_errno = errno;
  ThreadSlot* s = tls_slot;
  if (s == nullptr || s->owner == nullptr) {
    errno = saved_errno;
    return;
  }
  auto& stats = s->owner->stats();
  stats.signals_received.fetch_add(1, std::memory_order_relaxed);
  switch (s->kind) {
    case HandlerKind::nbr_neutralize:
      s->handler_entries.fetch_add(1, std::memory_order_release);
      stats.handler_entries.fetch_add(1, std::memory_order_relaxed);
      if (s->restartable != nullptr &&
          s->restartable->load(std::memory_order_seq_cst)) {
        Checkpoint* cp = s->checkpoint;
        if (cp == nullptr || !cp->armed) {
          static const char msg[] = "reclaim: restore on unarmed checkpoint\n";
          (void)!::write(2, msg, sizeof msg - 1);
          std::abort();
        }
        errno = saved_errno;
        siglongjmp(cp->context, 1);
      }
      break;
    case HandlerKind::pop_publish:
      if (s->publish != nullptr) s->publish(s->publish_context, s->tid);
      s->handler_entries.fetch_add(1, std::memory_order_release);
      stats.handler_entries.fetch_add(1, std::memory_order_relaxed);
      break;
    case HandlerKind::none:
      break;
  }
  errno = saved_errno;
}

/// Runs on the resumed path of a checkpoint: the signal was left blocked by
/// the jump out of the handler and must be re-enabled before continuing.
inline void after_restore(Checkpoint& cp) noexcept {
  cp.resumed = true;
  ++cp.restores;
  if (ThreadSlot* s = tls_slot; s != nullptr && s->owner != nullptr) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, s->owner->signum());
    pthread_sigmask(SIG_UNBLOCK, &set, nullptr);
  }
}

}  // namespace detail

/// Saves the current context into `cp` and arms it. Must expand in the frame
/// that runs the read phase; after a handler-triggered restore control comes
/// back here with cp.resumed == true and the signal unblocked.
#define RECLAIM_CHECKPOINT(cp)                                \
  do {                                                        \
    ::reclaim::Checkpoint& reclaim_cp_ = (cp);                \
    if (sigsetjmp(reclaim_cp_.context, 0) != 0) {             \
      ::reclaim::detail::after_restore(reclaim_cp_);          \
    } else {                                                  \
      reclaim_cp_.resumed = false;                            \
    }                                                         \
    reclaim_cp_.armed = true;                                 \
  } while (0)

/// Whether the neutralizing signal is currently blocked on the calling thread.
inline bool signal_blocked(int signum) {
  sigset_t current;
  pthread_sigmask(SIG_SETMASK, nullptr, &current);
  return sigismember(&current, signum) == 1;
}

/// Yield-based backoff for spin loops; the machine may have fewer cores than
/// runnable threads.
inline void spin_pause(unsigned& spins) noexcept {
  if (++spins < 16) {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#endif
    return;
  }
  spins = 0;
  sched_yield();
}

}  // namespace reclaim
