#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace banet {

namespace detail {

inline int threads_from_env() {
    if (const char* env = std::getenv("BANET_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v >= 1) return v;
        } catch (...) {
        }
    }
    return 1;
}

inline std::atomic<int>& thread_setting() {
    static std::atomic<int> value{threads_from_env()};
    return value;
}

} // namespace detail

/// Worker count used by kernels. Starts from BANET_THREADS, default 1.
inline int num_threads() { return detail::thread_setting().load(std::memory_order_relaxed); }

inline void set_num_threads(int n) {
    detail::thread_setting().store(std::max(1, n), std::memory_order_relaxed);
}

/// True when BANET_THREADS is present in the environment.
inline bool threads_pinned_by_env() { return std::getenv("BANET_THREADS") != nullptr; }

/// Runs fn(begin, end) over contiguous chunks of [0, count).
///
/// Callers must make every output element depend on exactly one chunk so
/// results do not change with the worker count.
template <typename Fn>
void parallel_for(std::int64_t count, Fn&& fn, std::int64_t min_chunk = 1) {
    if (count <= 0) return;
    const std::int64_t workers =
        std::min<std::int64_t>(num_threads(), (count + min_chunk - 1) / min_chunk);
    if (workers <= 1) {
        fn(std::int64_t{0}, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&](std::int64_t b, std::int64_t e) {
        try {
            fn(b, e);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    const std::int64_t step = (count + workers - 1) / workers;
    for (std::int64_t w = 1; w < workers; ++w) {
        const std::int64_t b = w * step;
        const std::int64_t e = std::min(count, b + step);
        if (b < e) pool.emplace_back(run, b, e);
    }
    run(0, std::min(count, step));
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/// Global multiply counter used to verify analytic MAC accounting.
///
/// Kernels report executed multiplies in bulk once per tile, so the cost
/// when disabled is a relaxed load per tile.
class MacCounter {
public:
    static bool enabled() noexcept { return state().enabled.load(std::memory_order_relaxed); }

    static void add(std::uint64_t n) noexcept {
        if (enabled()) state().count.fetch_add(n, std::memory_order_relaxed);
    }

    static std::uint64_t value() noexcept { return state().count.load(); }

private:
    friend class MacCounterScope;
    struct State {
        std::atomic<bool> enabled{false};
        std::atomic<std::uint64_t> count{0};
    };
    static State& state() {
        static State s;
        return s;
    }
};

/// Enables counting for the lifetime of the scope and resets the counter.
class MacCounterScope {
public:
    MacCounterScope() {
        MacCounter::state().count.store(0);
        MacCounter::state().enabled.store(true);
    }
    ~MacCounterScope() { MacCounter::state().enabled.store(false); }
    MacCounterScope(const MacCounterScope&) = delete;
    MacCounterScope& operator=(const MacCounterScope&) = delete;

    std::uint64_t count() const noexcept { return MacCounter::value(); }
};

} // namespace banet
