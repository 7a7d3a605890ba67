"""Git utilities for recording the source revision of training artifacts."""

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from git import GitCommandError, InvalidGitRepositoryError, NoSuchPathError, Repo

from .logger import get_logger


@dataclass
class GitInfo:
    """
    Git repository information.

    Attributes:
        commit_sha: SHA of the checked-out commit
        branch: Active branch name (None on a detached HEAD)
        is_dirty: Whether tracked files have uncommitted changes
        working_dir: Root of the working tree
    """

    commit_sha: str
    branch: Optional[str]
    is_dirty: bool
    working_dir: Path

    @property
    def revision(self) -> str:
        """Commit SHA with a ``-dirty`` suffix for modified trees."""
        return f"{self.commit_sha}-dirty" if self.is_dirty else self.commit_sha


class GitUtils:
    """Reads revision information of the checkout containing a path."""

    def __init__(self, repository_path: Path):
        """
        Initialize GitUtils.

        Args:
            repository_path: Any path inside the working tree

        Raises:
            InvalidGitRepositoryError: If the path is not inside a Git repository
        """
        self.logger = get_logger(__name__)
        self.repository_path = repository_path
        try:
            self.repo = Repo(self.repository_path, search_parent_directories=True)
        except (InvalidGitRepositoryError, NoSuchPathError) as e:
            self.logger.debug(f"No Git repository at {repository_path}: {e}")
            raise

    def get_git_info(self) -> GitInfo:
        """Collect commit, branch and dirty state."""
        try:
            branch: Optional[str] = self.repo.active_branch.name
        except TypeError:
            branch = None
        git_info = GitInfo(
            commit_sha=self.repo.head.commit.hexsha,
            branch=branch,
            is_dirty=self.repo.is_dirty(untracked_files=False),
            working_dir=Path(self.repo.working_dir),
        )
        self.logger.debug(f"Git info: {git_info}")
        return git_info


def get_source_revision(path: Optional[Path] = None) -> Optional[str]:
    """
    Revision of the source tree containing ``path`` (this package by default).

    Returns:
        The commit SHA, suffixed with ``-dirty`` for modified trees, or None
        outside a Git checkout
    """
    path = path or Path(__file__).resolve().parent
    try:
        return GitUtils(path).get_git_info().revision
    except (InvalidGitRepositoryError, NoSuchPathError, GitCommandError, ValueError):
        return None
