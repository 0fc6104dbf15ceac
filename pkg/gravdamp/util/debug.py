"""
Some generic debugging utilities.
"""

import os
import sys
import signal
import threading


signum_to_signame = {
    k: v for v, k in reversed(sorted(signal.__dict__.items())) if v.startswith("SIG") and not v.startswith("SIG_")
}


def dump_all_thread_tracebacks(exclude_thread_ids=None, exclude_self=False):
    """
    :param set[int]|None exclude_thread_ids:
    :param bool exclude_self:
    """
    if exclude_thread_ids is None:
        exclude_thread_ids = set()
    from better_exchook import print_tb

    if exclude_self:
        exclude_thread_ids = set(list(exclude_thread_ids) + [threading.current_thread().ident])

    if not hasattr(sys, "_current_frames"):
        print("Does not have sys._current_frames, cannot get thread tracebacks.")
        return
    print("")
    threads = {t.ident: t for t in threading.enumerate()}
    # noinspection PyProtectedMember
    for tid, stack in sorted(sys._current_frames().items()):
        # Threads not created via the threading module are left out.
        if tid not in threads:
            continue
        thread_ = threads[tid]
        tags = []
        if thread_ is threading.current_thread():
            tags += ["current"]
        if thread_ is threading.main_thread():
            tags += ["main"]
        tags += [str(thread_)]
        print("Thread %s:" % ", ".join(tags))
        if tid in exclude_thread_ids:
            print("(Excluded thread.)")
        else:
            print_tb(stack, file=sys.stdout)
        print("")
    print("That were all threads.")


def setup_warn_with_traceback():
    """
    Installs some hook for ``warnings.showwarning``.
    Useful to find where numpy emits RuntimeWarnings (overflow, invalid value in sqrt, ...).
    """
    import warnings
    from better_exchook import print_tb

    def warn_with_traceback(message, category, filename, lineno, file=None, line=None):
        """
        :param message:
        :param category:
        :param filename:
        :param lineno:
        :param file:
        :param line:
        """
        out = file if hasattr(file, "write") else sys.stderr
        out.write(warnings.formatwarning(message, category, filename, lineno, line))
        # noinspection PyProtectedMember,PyUnresolvedReferences
        print_tb(sys._getframe(), file=out)

    warnings.showwarning = warn_with_traceback


def init_better_exchook():
    """
    Installs our own ``sys.excepthook``, which uses :mod:`better_exchook`,
    but adds some special handling for the main thread.
    """
    from better_exchook import better_exchook

    def excepthook(exc_type, exc_obj, exc_tb):
        """
        :param exc_type:
        :param exc_obj:
        :param exc_tb:
        """
        # noinspection PyBroadException
        try:
            is_main_thread = threading.current_thread() is threading.main_thread()
        except Exception:  # Can happen at a very late state while quitting.
            if exc_type is KeyboardInterrupt:
                return
        else:
            if is_main_thread:
                if exc_type is KeyboardInterrupt and getattr(sys, "exited", False):
                    # Got SIGINT twice.
                    return
                sys.exited = True
        print("Unhandled exception %s in thread %s, proc %i." % (exc_type, threading.current_thread(), os.getpid()))
        if exc_type is KeyboardInterrupt:
            return
        if threading.current_thread() is threading.main_thread() and not issubclass(exc_type, Exception):
            # An exit-exception in the main thread. Print the stack of all other threads.
            dump_all_thread_tracebacks(exclude_self=True)
        better_exchook(exc_type, exc_obj, exc_tb, file=sys.stdout)

    sys.excepthook = excepthook

    from gravdamp.util.basic import to_bool

    if to_bool(os.environ.get("GRAVDAMP_WARN_WITH_TRACEBACK") or "0"):
        setup_warn_with_traceback()


def init_numpy_errors(mode=None):
    """
    Sets how numpy reports floating point errors (invalid sqrt near a turning point, overflow of a
    mode phase, division by zero at the vacuum boundary). Underflow is always ignored.

    :param str|None mode: "ignore", "warn", "raise" or "print". Default from GRAVDAMP_NUMPY_ERRORS, else "warn".
    :return: the previous settings, for :func:`numpy.seterr`
    :rtype: dict[str,str]
    """
    import numpy

    if mode is None:
        mode = os.environ.get("GRAVDAMP_NUMPY_ERRORS") or "warn"
    assert mode in ("ignore", "warn", "raise", "print"), "invalid numpy error mode %r" % mode
    return numpy.seterr(divide=mode, over=mode, invalid=mode, under="ignore")


def format_signum(signum):
    """
    :param int signum:
    :return: string "signum (signame)"
    :rtype: str
    """
    return "%s (%s)" % (signum, signum_to_signame.get(signum, "unknown"))


# noinspection PyUnusedLocal
def signal_handler(signum, frame):
    """
    Prints a message on stdout and dump all thread stacks.

    :param int signum: e.g. signal.SIGUSR1
    :param frame: ignored, will dump all threads
    """
    print("Signal handler: got signal %s" % format_signum(signum))
    dump_all_thread_tracebacks()


def install_signal_handler_if_default(signum, exceptions_are_fatal=False):
    """
    :param int signum: e.g. signal.SIGUSR1
    :param bool exceptions_are_fatal: if True, will reraise any exceptions. if False, will just print a message
    :return: True iff no exception, False otherwise. not necessarily that we registered our own handler
    :rtype: bool
    """
    try:
        if signal.getsignal(signum) == signal.SIG_DFL:
            signal.signal(signum, signal_handler)
        return True
    except Exception as exc:
        if exceptions_are_fatal:
            raise
        print("Cannot install signal handler for signal %s, exception %s" % (format_signum(signum), exc))
    return False


def init_faulthandler(sigusr1_chain=False):
    """
    Installs signal handlers for SIGUSR1/SIGUSR2 (dump all thread stacks, e.g. for a resolvent sweep
    which seems stuck), and enables :mod:`faulthandler` for SIGSEGV and others.

    :param bool sigusr1_chain: whether the default SIGUSR1 handler should also be called.
    """
    import faulthandler

    if sys.platform != "win32":
        if install_signal_handler_if_default(signal.SIGUSR1):
            sigusr1_chain = True
        install_signal_handler_if_default(signal.SIGUSR2)
    # Only enable if not yet enabled, otherwise leave it in its current state.
    if not faulthandler.is_enabled():
        faulthandler.enable()
        if sys.platform != "win32":
            faulthandler.register(signal.SIGUSR1, all_threads=True, chain=sigusr1_chain)
