"""
Common interface for similarity kernels.
"""

from typing import TYPE_CHECKING, Callable, Dict, List, Protocol, Union

if TYPE_CHECKING:
    from vendirl.kernels.spec import SimilaritySpec, SkillSample


class Kernel(Protocol):
    """Protocol for similarity kernels between two skills.

    A kernel must be symmetric in its arguments and give exactly 1
    for identical samples.
    """

    def __call__(
        self, a: "SkillSample", b: "SkillSample", spec: "SimilaritySpec"
    ) -> float: ...

    __name__: str


KERNELS: Dict[str, Kernel] = {}


def kernel(*, name: str) -> Callable[[Kernel], Kernel]:
    """Decorator to register kernel functions under a name."""

    def register(func: Kernel) -> Kernel:
        if name in KERNELS and KERNELS[name] is not func:
            raise ValueError(f"Kernel {name!r} is already registered")
        KERNELS[name] = func
        return func

    return register


def lookup(name: str) -> Union[Kernel, None]:
    """Look up a kernel by name."""
    return KERNELS.get(name)


def names() -> List[str]:
    """Names of all registered kernels."""
    return sorted(KERNELS)
