#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace pano::detail {

// Splits [0, rows) into contiguous bands, one per worker, and runs
// fn(begin, end) on each. Results must depend only on the row index.
template <typename Fn>
void for_each_row_band(int rows, unsigned workers, Fn&& fn)
{
    workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(std::max(rows, 1)));
    if (workers == 1) {
        fn(0, rows);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            const int begin = static_cast<int>(static_cast<long long>(rows) * w / workers);
            const int end = static_cast<int>(static_cast<long long>(rows) * (w + 1) / workers);
            pool.emplace_back([&, w, begin, end] {
                try {
                    fn(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace pano::detail
