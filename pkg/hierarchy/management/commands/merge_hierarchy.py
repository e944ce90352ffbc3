"""
Write a merged label hierarchy
Usage: python manage.py merge_hierarchy --preset cifar100-10 --output runs/cifar100-10
       python manage.py merge_hierarchy --input h.txt --groups "0,1;2,3" --output runs/merged
"""
from django.core.management.base import CommandError

from hierarchy import MergeSpec, dump_hierarchy, load_hierarchy, merge_coarse
from hierarchy.presets import HIERARCHY_PRESETS
from runner.base import ExperimentCommand


def parse_groups(text: str) -> MergeSpec:
    """'0,1;2,17;3' -> MergeSpec(((0, 1), (2, 17), (3,)))"""
    groups = []
    for part in text.split(';'):
        if part.strip():
            groups.append(tuple(int(index) for index in part.split(',') if index.strip()))
    return MergeSpec(groups=tuple(groups))


class Command(ExperimentCommand):
    help = 'Merge the coarse classes of one hierarchy level, from a preset or explicit groups'

    FIELDS = {
        'preset': str,
        'input': str,
        'groups': str,
        'level': str,
        'name': str,
    }
    DEFAULTS = {'level': '0'}

    def add_experiment_arguments(self, parser):
        parser.add_argument('--preset', choices=sorted(HIERARCHY_PRESETS), help='Built-in hierarchy')
        parser.add_argument('--input', help='Hierarchy file to merge')
        parser.add_argument('--groups', help="Merge groups, e.g. '0,1;2,17;3,4'")
        parser.add_argument('--level', help='Level position or name to merge (default 0)')
        parser.add_argument('--name', help='Name of the merged level')

    def run(self, resolved):
        if bool(resolved['preset']) == bool(resolved['input']):
            raise CommandError('give exactly one of --preset or --input')
        if resolved['preset'] and resolved['preset'] not in HIERARCHY_PRESETS:
            raise CommandError(f"unknown preset '{resolved['preset']}', choose from {sorted(HIERARCHY_PRESETS)}")

        source = HIERARCHY_PRESETS[resolved['preset']]() if resolved['preset'] else load_hierarchy(resolved['input'])
        level = int(resolved['level']) if resolved['level'].isdigit() else resolved['level']
        merged = merge_coarse(source, level, parse_groups(resolved['groups']), resolved['name']) \
            if resolved['groups'] else source

        out_dir = self.output_dir(resolved)
        manifest = self.start_manifest(resolved, out_dir, inputs=[resolved['input']])
        manifest.add_output(dump_hierarchy(merged, out_dir / 'hierarchy.txt'))
        counts = ', '.join(f"{lvl.name}: {lvl.coarse_count}" for lvl in merged.levels)
        self.stdout.write(f"Hierarchy with {merged.fine_count} fine classes ({counts})")
        self.finish_manifest(manifest, out_dir)
