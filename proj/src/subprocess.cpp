#include "xpomcp/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "xpomcp/errors.hpp"

namespace xpomcp {

SubprocessResult run_subprocess(const std::string& path, const std::string& input,
                                double timeout_seconds) {
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (pipe(in_pipe) || pipe(out_pipe) || pipe(err_pipe))
        throw Error("pipe() failed: " + std::string(std::strerror(errno)));

    const pid_t pid = fork();
    if (pid < 0) throw Error("fork() failed: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        // Child: own process group so a timeout can kill helpers too.
        setpgid(0, 0);
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        execlp(path.c_str(), path.c_str(), static_cast<char*>(nullptr));
        const char* msg = "exec failed\n";
        ssize_t n = write(STDERR_FILENO, msg, std::strlen(msg));
        (void)n;
        _exit(127);
    }

    close(in_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);

    SubprocessResult result;
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration<double>(timeout_seconds);
    std::size_t written = 0;
    bool stdin_open = true, stdout_open = true, stderr_open = true;

    while (stdout_open || stderr_open || stdin_open) {
        struct pollfd fds[3];
        int n = 0;
        int idx_in = -1, idx_out = -1, idx_err = -1;
        if (stdin_open) {
            idx_in = n;
            fds[n++] = {in_pipe[1], POLLOUT, 0};
        }
        if (stdout_open) {
            idx_out = n;
            fds[n++] = {out_pipe[0], POLLIN, 0};
        }
        if (stderr_open) {
            idx_err = n;
            fds[n++] = {err_pipe[0], POLLIN, 0};
        }
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            break;
        }
        const int ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
                .count());
        const int rc = poll(fds, n, std::min(ms, 1000));
        if (rc < 0 && errno != EINTR)
            throw Error("poll() failed: " + std::string(std::strerror(errno)));
        if (rc <= 0) continue;

        char buf[65536];
        if (idx_in >= 0 && (fds[idx_in].revents & (POLLOUT | POLLERR | POLLHUP))) {
            if (written >= input.size() || (fds[idx_in].revents & (POLLERR | POLLHUP))) {
                close(in_pipe[1]);
                stdin_open = false;
            } else {
                const ssize_t w = write(in_pipe[1], input.data() + written,
                                        input.size() - written);
                if (w > 0) written += static_cast<std::size_t>(w);
                if (w < 0 && errno != EAGAIN && errno != EINTR) {
                    close(in_pipe[1]);
                    stdin_open = false;
                }
                if (written >= input.size()) {
                    close(in_pipe[1]);
                    stdin_open = false;
                }
            }
        }
        if (idx_out >= 0 && (fds[idx_out].revents & (POLLIN | POLLHUP))) {
            const ssize_t r = read(out_pipe[0], buf, sizeof(buf));
            if (r > 0)
                result.stdout_text.append(buf, static_cast<std::size_t>(r));
            else if (r == 0 || (r < 0 && errno != EAGAIN && errno != EINTR)) {
                close(out_pipe[0]);
                stdout_open = false;
            }
        }
        if (idx_err >= 0 && (fds[idx_err].revents & (POLLIN | POLLHUP))) {
            const ssize_t r = read(err_pipe[0], buf, sizeof(buf));
            if (r > 0)
                result.stderr_text.append(buf, static_cast<std::size_t>(r));
            else if (r == 0 || (r < 0 && errno != EAGAIN && errno != EINTR)) {
                close(err_pipe[0]);
                stderr_open = false;
            }
        }
    }
    if (stdin_open) close(in_pipe[1]);
    if (stdout_open) close(out_pipe[0]);
    if (stderr_open) close(err_pipe[0]);

    if (result.timed_out) kill(-pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);
    return result;
}

}  // namespace xpomcp
